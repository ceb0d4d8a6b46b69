#ifndef PROOFMATCH_H
#define PROOFMATCH_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum PmStatus {
  PM_STATUS_OK = 0,
  PM_STATUS_NULL_POINTER = 1,
  PM_STATUS_INVALID_ARGUMENT = 2,
  PM_STATUS_IO = 3,
  PM_STATUS_FORMAT = 4,
  PM_STATUS_SOLVER = 5,
  PM_STATUS_ENCODER = 6,
  PM_STATUS_PANIC = 7,
} PmStatus;

/**
 * A statement-proof corpus.
 */
typedef struct PmCorpus PmCorpus;

/**
 * A trained encoder and scoring head.
 */
typedef struct PmModel PmModel;

/**
 * A square statement-by-proof score matrix.
 */
typedef struct PmScoreMatrix PmScoreMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next `pm_*` call on the same thread.
 */
const char *pm_last_error(void);

/**
 * Library version string, static storage.
 */
const char *pm_version(void);

/**
 * Reads a corpus file.
 *
 * # Safety
 * `path` must be a valid C string; `out` must be writable.
 */
enum PmStatus pm_corpus_read(const char *path, struct PmCorpus **out);

/**
 * Writes a corpus file.
 *
 * # Safety
 * `corpus` must come from this library; `path` must be a valid C string.
 */
enum PmStatus pm_corpus_write(const struct PmCorpus *corpus, const char *path);

/**
 * Number of pairs, or 0 for a null handle.
 *
 * # Safety
 * `corpus` must be null or come from this library.
 */
size_t pm_corpus_len(const struct PmCorpus *corpus);

/**
 * Applies a replacement level (`conservation`, `partial`, `full` or
 * `transposition`) to every proof and returns a new corpus. `alpha` is
 * used by `partial` only.
 *
 * # Safety
 * `corpus` must come from this library; `level` must be a valid C string;
 * `out` must be writable.
 */
enum PmStatus pm_corpus_replace(const struct PmCorpus *corpus,
                                const char *level,
                                double alpha,
                                uint64_t seed,
                                struct PmCorpus **out);

/**
 * # Safety
 * `corpus` must be null or come from this library, and not be used again.
 */
void pm_corpus_free(struct PmCorpus *corpus);

/**
 * Reads a model file written by `match train`.
 *
 * # Safety
 * `path` must be a valid C string; `out` must be writable.
 */
enum PmStatus pm_model_read(const char *path, struct PmModel **out);

/**
 * Encoding dimension, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or come from this library.
 */
size_t pm_model_dim(const struct PmModel *model);

/**
 * # Safety
 * `model` must be null or come from this library, and not be used again.
 */
void pm_model_free(struct PmModel *model);

/**
 * Scores every statement of `corpus` against every proof with a model.
 *
 * # Safety
 * Handles must come from this library; `out` must be writable.
 */
enum PmStatus pm_model_score(const struct PmModel *model,
                             const struct PmCorpus *corpus,
                             struct PmScoreMatrix **out);

/**
 * Scores a corpus with TF-IDF cosine, using the corpus itself for
 * document frequencies.
 *
 * # Safety
 * `corpus` must come from this library; `out` must be writable.
 */
enum PmStatus pm_tfidf_score(const struct PmCorpus *corpus, struct PmScoreMatrix **out);

/**
 * Builds an `n`×`n` matrix from `n*n` row-major values.
 *
 * # Safety
 * `data` must point to `n*n` readable doubles; `out` must be writable.
 */
enum PmStatus pm_matrix_new(size_t n, const double *data, struct PmScoreMatrix **out);

/**
 * Side length, or 0 for a null handle.
 *
 * # Safety
 * `m` must be null or come from this library.
 */
size_t pm_matrix_n(const struct PmScoreMatrix *m);

/**
 * Copies the `n*n` row-major values into `out`.
 *
 * # Safety
 * `m` must come from this library; `out` must hold `n*n` doubles.
 */
enum PmStatus pm_matrix_copy(const struct PmScoreMatrix *m, double *out);

/**
 * # Safety
 * `m` must be null or come from this library, and not be used again.
 */
void pm_matrix_free(struct PmScoreMatrix *m);

/**
 * Exact maximum-weight assignment by enumeration (n at most 9).
 * `proof_of[i]` receives the proof given to statement i.
 *
 * # Safety
 * `m` must come from this library; `proof_of` must hold n elements;
 * `objective` may be null.
 */
enum PmStatus pm_solve_brute(const struct PmScoreMatrix *m, size_t *proof_of, double *objective);

/**
 * Exact maximum-weight assignment on the dense matrix.
 *
 * # Safety
 * As for [`pm_solve_brute`].
 */
enum PmStatus pm_solve_dense(const struct PmScoreMatrix *m, size_t *proof_of, double *objective);

/**
 * Assignment restricted to each statement's `k` best proofs. `padded`
 * (may be null) is set when the retained candidates admit no perfect
 * matching and fallback edges were used.
 *
 * # Safety
 * As for [`pm_solve_brute`]; `padded` may be null.
 */
enum PmStatus pm_solve_sparse(const struct PmScoreMatrix *m,
                              size_t k,
                              size_t *proof_of,
                              double *objective,
                              bool *padded);

/**
 * Ranks proofs per statement. `gold_rank[i]` receives the 1-based rank of
 * proof i for statement i; `top1[i]` (may be null) the best proof.
 *
 * # Safety
 * `m` must come from this library; `gold_rank` and `top1` must hold n
 * elements.
 */
enum PmStatus pm_decode_local(const struct PmScoreMatrix *m, size_t *gold_rank, size_t *top1);

/**
 * Mean reciprocal rank of `n` 1-based ranks.
 *
 * # Safety
 * `ranks` must point to `n` readable values; `out` must be writable.
 */
enum PmStatus pm_mrr(const size_t *ranks, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROOFMATCH_H */
