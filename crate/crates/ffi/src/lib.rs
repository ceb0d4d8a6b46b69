//! C ABI over the proofmatch library.
//!
//! Objects cross the boundary as opaque handles created by `pm_*_read` or
//! `pm_*_new` and released by the matching `pm_*_free`. Every fallible call
//! returns a [`PmStatus`]; on failure [`pm_last_error`] describes the cause.
//! Panics never unwind into C: they are reported as `PM_STATUS_PANIC`.
//!
//! Output arrays are caller-allocated and must hold `n` elements, where `n`
//! is the matrix or corpus size.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fmt::Display;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::OnceLock;

use proofmatch::assignment::{
    prune_topk, solve_brute, solve_dense, solve_sparse, Assignment, AssignmentError, ScoreMatrix,
};
use proofmatch::corpus::{read_corpus, write_corpus, Corpus, CorpusError};
use proofmatch::decoding::decode_local;
use proofmatch::encoders::{read_model, DfTable, EncoderError, ModelState, TfIdfScorer};
use proofmatch::evalharness::{mrr, score_corpus};
use proofmatch::symbols::{replace_corpus, ProtectedSet, ReplacementLevel};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Solver = 5,
    Encoder = 6,
    Panic = 7,
}

/// A statement-proof corpus.
pub struct PmCorpus {
    inner: Corpus,
}

/// A trained encoder and scoring head.
pub struct PmModel {
    inner: ModelState,
}

/// A square statement-by-proof score matrix.
pub struct PmScoreMatrix {
    inner: ScoreMatrix,
}

type Failure = (PmStatus, String);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PmStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_owned());
            set_last_error(format!("panic: {msg}"));
            PmStatus::Panic
        }
    }
}

fn fail(status: PmStatus, e: impl Display) -> Failure {
    (status, e.to_string())
}

fn corpus_failure(e: CorpusError) -> Failure {
    match e {
        CorpusError::Io(_) => fail(PmStatus::Io, e),
        _ => fail(PmStatus::Format, e),
    }
}

fn encoder_failure(e: EncoderError) -> Failure {
    match e {
        EncoderError::Io(_) => fail(PmStatus::Io, e),
        EncoderError::Format(_) => fail(PmStatus::Format, e),
        _ => fail(PmStatus::Encoder, e),
    }
}

fn solver_failure(e: AssignmentError) -> Failure {
    fail(PmStatus::Solver, e)
}

fn null(what: &str) -> Failure {
    fail(PmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(PmStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn out_slice<'a, T>(p: *mut T, n: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_assignment(
    a: &Assignment,
    objective: f64,
    proof_of: *mut usize,
    out_objective: *mut f64,
) -> Result<(), Failure> {
    out_slice(proof_of, a.len(), "proof_of")?.copy_from_slice(&a.proof_of);
    if !out_objective.is_null() {
        *out_objective = objective;
    }
    Ok(())
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next `pm_*` call on the same thread.
#[no_mangle]
pub extern "C" fn pm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version string, static storage.
#[no_mangle]
pub extern "C" fn pm_version() -> *const c_char {
    static VERSION: OnceLock<CString> = OnceLock::new();
    VERSION.get_or_init(|| CString::new(proofmatch::cli::VERSION).expect("no nul")).as_ptr()
}

/// Reads a corpus file.
///
/// # Safety
/// `path` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_corpus_read(path: *const c_char, out: *mut *mut PmCorpus) -> PmStatus {
    guard(|| {
        let path = PathBuf::from(c_str(path, "path")?);
        let inner = read_corpus(&path).map_err(corpus_failure)?;
        emit(out, PmCorpus { inner })
    })
}

/// Writes a corpus file.
///
/// # Safety
/// `corpus` must come from this library; `path` must be a valid C string.
#[no_mangle]
pub unsafe extern "C" fn pm_corpus_write(corpus: *const PmCorpus, path: *const c_char) -> PmStatus {
    guard(|| {
        let corpus = borrow(corpus, "corpus")?;
        let path = PathBuf::from(c_str(path, "path")?);
        write_corpus(&corpus.inner, &path).map_err(corpus_failure)
    })
}

/// Number of pairs, or 0 for a null handle.
///
/// # Safety
/// `corpus` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn pm_corpus_len(corpus: *const PmCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.inner.len())
}

/// Applies a replacement level (`conservation`, `partial`, `full` or
/// `transposition`) to every proof and returns a new corpus. `alpha` is
/// used by `partial` only.
///
/// # Safety
/// `corpus` must come from this library; `level` must be a valid C string;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_corpus_replace(
    corpus: *const PmCorpus,
    level: *const c_char,
    alpha: f64,
    seed: u64,
    out: *mut *mut PmCorpus,
) -> PmStatus {
    guard(|| {
        let corpus = borrow(corpus, "corpus")?;
        let level =
            ReplacementLevel::parse(c_str(level, "level")?, alpha).map_err(|e| fail(PmStatus::InvalidArgument, e))?;
        let inner = replace_corpus(&corpus.inner, level, &ProtectedSet::default(), seed)
            .map_err(|e| fail(PmStatus::InvalidArgument, e))?;
        emit(out, PmCorpus { inner })
    })
}

/// # Safety
/// `corpus` must be null or come from this library, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn pm_corpus_free(corpus: *mut PmCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Reads a model file written by `match train`.
///
/// # Safety
/// `path` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_model_read(path: *const c_char, out: *mut *mut PmModel) -> PmStatus {
    guard(|| {
        let path = PathBuf::from(c_str(path, "path")?);
        let inner = read_model(&path).map_err(encoder_failure)?;
        emit(out, PmModel { inner })
    })
}

/// Encoding dimension, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn pm_model_dim(model: *const PmModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.config().d)
}

/// # Safety
/// `model` must be null or come from this library, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn pm_model_free(model: *mut PmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Scores every statement of `corpus` against every proof with a model.
///
/// # Safety
/// Handles must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_model_score(
    model: *const PmModel,
    corpus: *const PmCorpus,
    out: *mut *mut PmScoreMatrix,
) -> PmStatus {
    guard(|| {
        let model = borrow(model, "model")?;
        let corpus = borrow(corpus, "corpus")?;
        let inner = score_corpus(&model.inner, &corpus.inner).map_err(|e| fail(PmStatus::Encoder, e))?;
        emit(out, PmScoreMatrix { inner })
    })
}

/// Scores a corpus with TF-IDF cosine, using the corpus itself for
/// document frequencies.
///
/// # Safety
/// `corpus` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_tfidf_score(corpus: *const PmCorpus, out: *mut *mut PmScoreMatrix) -> PmStatus {
    guard(|| {
        let corpus = borrow(corpus, "corpus")?;
        let scorer = TfIdfScorer { stats: DfTable::from_corpus(&corpus.inner) };
        let inner = score_corpus(&scorer, &corpus.inner).map_err(|e| fail(PmStatus::Encoder, e))?;
        emit(out, PmScoreMatrix { inner })
    })
}

/// Builds an `n`×`n` matrix from `n*n` row-major values.
///
/// # Safety
/// `data` must point to `n*n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_matrix_new(n: usize, data: *const f64, out: *mut *mut PmScoreMatrix) -> PmStatus {
    guard(|| {
        let len = n.checked_mul(n).ok_or_else(|| fail(PmStatus::InvalidArgument, "n*n overflows"))?;
        let values = if len == 0 {
            Vec::new()
        } else if data.is_null() {
            return Err(null("data"));
        } else {
            std::slice::from_raw_parts(data, len).to_vec()
        };
        let inner = ScoreMatrix::new(n, values).map_err(|e| fail(PmStatus::InvalidArgument, e))?;
        emit(out, PmScoreMatrix { inner })
    })
}

/// Side length, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn pm_matrix_n(m: *const PmScoreMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.n())
}

/// Copies the `n*n` row-major values into `out`.
///
/// # Safety
/// `m` must come from this library; `out` must hold `n*n` doubles.
#[no_mangle]
pub unsafe extern "C" fn pm_matrix_copy(m: *const PmScoreMatrix, out: *mut f64) -> PmStatus {
    guard(|| {
        let m = borrow(m, "matrix")?;
        out_slice(out, m.inner.data().len(), "out")?.copy_from_slice(m.inner.data());
        Ok(())
    })
}

/// # Safety
/// `m` must be null or come from this library, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn pm_matrix_free(m: *mut PmScoreMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Exact maximum-weight assignment by enumeration (n at most 9).
/// `proof_of[i]` receives the proof given to statement i.
///
/// # Safety
/// `m` must come from this library; `proof_of` must hold n elements;
/// `objective` may be null.
#[no_mangle]
pub unsafe extern "C" fn pm_solve_brute(
    m: *const PmScoreMatrix,
    proof_of: *mut usize,
    objective: *mut f64,
) -> PmStatus {
    guard(|| {
        let m = borrow(m, "matrix")?;
        let (a, obj) = solve_brute(&m.inner).map_err(solver_failure)?;
        write_assignment(&a, obj, proof_of, objective)
    })
}

/// Exact maximum-weight assignment on the dense matrix.
///
/// # Safety
/// As for [`pm_solve_brute`].
#[no_mangle]
pub unsafe extern "C" fn pm_solve_dense(
    m: *const PmScoreMatrix,
    proof_of: *mut usize,
    objective: *mut f64,
) -> PmStatus {
    guard(|| {
        let m = borrow(m, "matrix")?;
        let (a, obj) = solve_dense(&m.inner);
        write_assignment(&a, obj, proof_of, objective)
    })
}

/// Assignment restricted to each statement's `k` best proofs. `padded`
/// (may be null) is set when the retained candidates admit no perfect
/// matching and fallback edges were used.
///
/// # Safety
/// As for [`pm_solve_brute`]; `padded` may be null.
#[no_mangle]
pub unsafe extern "C" fn pm_solve_sparse(
    m: *const PmScoreMatrix,
    k: usize,
    proof_of: *mut usize,
    objective: *mut f64,
    padded: *mut bool,
) -> PmStatus {
    guard(|| {
        let m = borrow(m, "matrix")?;
        let sparse = prune_topk(&m.inner, k).map_err(solver_failure)?;
        let sol = solve_sparse(&sparse);
        write_assignment(&sol.assignment, sol.objective, proof_of, objective)?;
        if !padded.is_null() {
            *padded = sol.padded;
        }
        Ok(())
    })
}

/// Ranks proofs per statement. `gold_rank[i]` receives the 1-based rank of
/// proof i for statement i; `top1[i]` (may be null) the best proof.
///
/// # Safety
/// `m` must come from this library; `gold_rank` and `top1` must hold n
/// elements.
#[no_mangle]
pub unsafe extern "C" fn pm_decode_local(m: *const PmScoreMatrix, gold_rank: *mut usize, top1: *mut usize) -> PmStatus {
    guard(|| {
        let m = borrow(m, "matrix")?;
        let r = decode_local(&m.inner);
        out_slice(gold_rank, r.len(), "gold_rank")?.copy_from_slice(&r.gold_rank);
        if !top1.is_null() {
            out_slice(top1, r.len(), "top1")?.copy_from_slice(&r.top1());
        }
        Ok(())
    })
}

/// Mean reciprocal rank of `n` 1-based ranks.
///
/// # Safety
/// `ranks` must point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_mrr(ranks: *const usize, n: usize, out: *mut f64) -> PmStatus {
    guard(|| {
        if ranks.is_null() {
            return Err(null("ranks"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let ranks = std::slice::from_raw_parts(ranks, n);
        *out = mrr(ranks).map_err(|e| fail(PmStatus::InvalidArgument, e))?;
        Ok(())
    })
}
