//! Document encoders and the bilinear scoring head.
//!
//! Three encoders are available: a TF-IDF baseline scored by cosine, a
//! pooled embedding bag, and a stack of multi-head self-attention layers
//! with residual connections followed by max or mean pooling. The trainable
//! encoders come with hand-written exact gradients ([`ModelState::backward`]).

mod backward;
mod io;
mod model;
pub mod tensor;
mod tfidf;
mod vocab;

use thiserror::Error;

use crate::corpus::Token;

pub use backward::{BatchForward, Gradients, GroupNorms};
pub use io::{model_from_bytes, model_to_bytes, read_model, write_model, MODEL_MAGIC};
pub(crate) use io::{ByteReader, ByteWriter};
pub(crate) use model::round_to_f32;
pub use model::{AttentionLayer, BilinearHead, DocCache, EncoderConfig, EncoderKind, ModelState, Pooling};
pub use tensor::Matrix;
pub use tfidf::{cosine, tfidf_encode, DfTable, SparseVector, TfIdfScorer};
pub use vocab::{build_vocab, Vocabulary, UNK};

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("document-frequency table is empty")]
    EmptyStats,
    #[error("cannot encode an empty document")]
    EmptyDocument,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("backward called with a forward cache from different parameters")]
    StaleCache,
    #[error("invalid encoder configuration: {0}")]
    BadConfig(String),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Something that can fill a statement-by-proof score matrix.
///
/// Statements and proofs are encoded separately so each text is encoded
/// exactly once; `score` then combines two encodings.
pub trait PairScorer: Sync {
    type Encoding: Send + Sync;

    fn encode_statement(&self, doc: &[Token]) -> Result<Self::Encoding, EncoderError>;
    fn encode_proof(&self, doc: &[Token]) -> Result<Self::Encoding, EncoderError>;
    fn score(&self, statement: &Self::Encoding, proof: &Self::Encoding) -> f64;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Font, PairRecord, SplitTag};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toks(words: &[&str]) -> Vec<Token> {
        words.iter().map(|w| Token::math(*w, Font::Normal).unwrap()).collect()
    }

    fn vocab_of(words: &[&str]) -> Vocabulary {
        let pair = PairRecord {
            pair_id: "p".into(),
            article_id: "a".into(),
            categories: vec![],
            statement: toks(words),
            proof: vec![],
        };
        build_vocab(&Corpus::new(vec![pair], SplitTag::Unsplit).unwrap(), 1).unwrap()
    }

    const WORDS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

    #[test]
    fn single_token_max_pool_is_its_embedding() {
        let state = ModelState::init(vocab_of(&WORDS), EncoderConfig::pooled(8, Pooling::Max), 1).unwrap();
        let id = state.vocab().id(&toks(&["c"])[0]);
        assert_eq!(state.encode(&toks(&["c"])).unwrap(), state.embeddings().row(id).to_vec());
    }

    #[test]
    fn mean_of_repeated_token() {
        let state = ModelState::init(vocab_of(&WORDS), EncoderConfig::pooled(8, Pooling::Mean), 1).unwrap();
        let one = state.encode(&toks(&["b"])).unwrap();
        let two = state.encode(&toks(&["b", "b"])).unwrap();
        for (x, y) in one.iter().zip(&two) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn zeroed_attention_reduces_to_pooling() {
        for positional in [false, true] {
            let cfg = EncoderConfig {
                kind: EncoderKind::SelfAttentive,
                d: 8,
                layers: 2,
                heads: 2,
                d_k: 3,
                pooling: Pooling::Max,
                positional,
            };
            let mut state = ModelState::init(vocab_of(&WORDS), cfg, 4).unwrap();
            for l in state.layers_mut() {
                l.tensors_mut().for_each(|t| t.scale(0.0));
            }
            let doc = toks(&["a", "d", "f", "b"]);
            let got = state.encode(&doc).unwrap();
            // reference: pool the (position-augmented) embeddings directly
            let mut x = Matrix::zeros(doc.len(), 8);
            for (r, t) in doc.iter().enumerate() {
                x.row_mut(r).copy_from_slice(state.embeddings().row(state.vocab().id(t)));
            }
            if positional {
                model::add_positions(&mut x);
            }
            let expected: Vec<f64> =
                (0..8).map(|c| (0..doc.len()).map(|r| x.get(r, c)).fold(f64::NEG_INFINITY, f64::max)).collect();
            assert_eq!(got, expected, "positional = {positional}");
            if !positional {
                let mut pooled_cfg = EncoderConfig::pooled(8, Pooling::Max);
                pooled_cfg.pooling = Pooling::Max;
                let pooled = ModelState::from_parts(
                    state.vocab().clone(),
                    pooled_cfg,
                    state.embeddings().clone(),
                    vec![],
                    state.head().clone(),
                    0,
                )
                .unwrap();
                assert_eq!(pooled.encode(&doc).unwrap(), got);
            }
        }
    }

    #[test]
    fn bilinear_score_examples() {
        let head = BilinearHead { w: Matrix::identity(2), b: 0.5 };
        assert_eq!(head.score(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.5);
        assert_eq!(head.score(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 0.5);
        let head = BilinearHead { w: Matrix::identity(2), b: 0.0 };
        assert_eq!(head.score(&[1.0, -1.0], &[2.0, 5.0]).unwrap(), -3.0);
        assert!(matches!(
            head.score(&[1.0], &[1.0, 2.0]),
            Err(EncoderError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn head_gradients_are_outer_product_and_one() {
        let state = ModelState::init(vocab_of(&WORDS), EncoderConfig::pooled(4, Pooling::Max), 2).unwrap();
        let s = toks(&["a", "b"]);
        let p = toks(&["c"]);
        let fwd = state.forward_batch(&[&s], &[&p]).unwrap();
        let g = state.backward(&fwd, &Matrix::from_rows(&[vec![1.0]])).unwrap();
        assert_eq!(g.b, 1.0);
        let sv = state.encode(&s).unwrap();
        let pv = state.encode(&p).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((g.w.get(i, j) - sv[i] * pv[j]).abs() < 1e-15);
            }
        }
        assert_eq!(g.embeddings.len(), 3, "only touched rows");
    }

    #[test]
    fn stale_cache_detected() {
        let mut state = ModelState::init(vocab_of(&WORDS), EncoderConfig::pooled(4, Pooling::Max), 2).unwrap();
        let s = toks(&["a"]);
        let fwd = state.forward_batch(&[&s], &[&s]).unwrap();
        state.head_mut().b = 1.0;
        assert!(matches!(state.backward(&fwd, &Matrix::from_rows(&[vec![1.0]])), Err(EncoderError::StaleCache)));
    }

    #[test]
    fn empty_document() {
        let state = ModelState::init(vocab_of(&WORDS), EncoderConfig::pooled(4, Pooling::Max), 2).unwrap();
        assert!(matches!(state.encode(&[]), Err(EncoderError::EmptyDocument)));
    }

    #[test]
    fn config_validation() {
        let mut cfg = EncoderConfig::reference();
        assert!(cfg.validate().is_ok());
        cfg.heads = 7;
        assert!(cfg.validate().is_err());
        assert!(EncoderConfig::desk().validate().is_ok());
    }

    /// Scalar objective Σ c_ij · m_ij for fixed random weights c.
    fn weighted_score_sum(state: &ModelState, s: &[&[Token]], p: &[&[Token]], c: &Matrix) -> f64 {
        let fwd = state.forward_batch(s, p).unwrap();
        fwd.scores.data().iter().zip(c.data()).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (draw, pooling) in [(0, Pooling::Max), (1, Pooling::Mean), (2, Pooling::Max)] {
            let cfg = EncoderConfig {
                kind: EncoderKind::SelfAttentive,
                d: 4,
                layers: 2,
                heads: 2,
                d_k: 3,
                pooling,
                positional: draw % 2 == 0,
            };
            let mut state = ModelState::init(vocab_of(&WORDS), cfg, draw).unwrap();
            // spread parameters so attention is far from uniform
            for t in state.tensors_mut() {
                for x in t.iter_mut() {
                    *x = rng.gen_range(-1.0..1.0);
                }
            }
            let docs_s = [toks(&["a", "b", "c"]), toks(&["d", "e"])];
            let docs_p = [toks(&["f", "a"]), toks(&["b", "zzz", "c", "d"])];
            let s: Vec<&[Token]> = docs_s.iter().map(Vec::as_slice).collect();
            let p: Vec<&[Token]> = docs_p.iter().map(Vec::as_slice).collect();
            let c = Matrix::from_vec(2, 2, (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let fwd = state.forward_batch(&s, &p).unwrap();
            let analytic = state.backward(&fwd, &c).unwrap().to_dense(&state);
            let h = 1e-5;
            let n_tensors = state.tensors().len();
            for ti in 0..n_tensors {
                let len = state.tensors()[ti].len();
                for k in 0..len {
                    let orig = state.tensors()[ti][k];
                    state.tensors_mut()[ti][k] = orig + h;
                    let up = weighted_score_sum(&state, &s, &p, &c);
                    state.tensors_mut()[ti][k] = orig - h;
                    let down = weighted_score_sum(&state, &s, &p, &c);
                    state.tensors_mut()[ti][k] = orig;
                    let fd = (up - down) / (2.0 * h);
                    let a = analytic[ti][k];
                    assert!(
                        (a - fd).abs() / a.abs().max(1.0) < 1e-6,
                        "draw {draw} tensor {ti} index {k}: analytic {a} vs fd {fd}"
                    );
                }
            }
        }
    }

    #[test]
    fn attention_rows_sum_to_one() {
        let cfg = EncoderConfig { d: 8, layers: 2, heads: 2, d_k: 4, ..EncoderConfig::desk() };
        let state = ModelState::init(vocab_of(&WORDS), cfg, 3).unwrap();
        let cache = state.forward_doc(&toks(&["a", "b", "c", "a", "f"])).unwrap();
        for l in 0..2 {
            for h in 0..2 {
                let a = cache.attention(l, h);
                for r in 0..a.rows() {
                    assert!((a.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn model_bytes_round_trip() {
        let cfg = EncoderConfig { d: 8, layers: 1, heads: 2, d_k: 4, ..EncoderConfig::desk() };
        let state = ModelState::init(vocab_of(&WORDS), cfg, 3).unwrap();
        let bytes = model_to_bytes(&state);
        assert_eq!(&bytes[..4], b"PMM1");
        let (back, used) = model_from_bytes(&bytes).unwrap();
        assert_eq!(used, bytes.len());
        assert_eq!(back, state);
        let mut corrupt = bytes.clone();
        corrupt[20] ^= 1;
        assert!(model_from_bytes(&corrupt).is_err());
        assert!(model_from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }
}
