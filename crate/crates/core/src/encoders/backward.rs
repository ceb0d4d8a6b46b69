//! Exact gradients of `score(enc(s_i), enc(p_j))` with respect to every
//! parameter, given upstream gradients on a batch score matrix.

use std::collections::BTreeMap;

use crate::corpus::Token;

use super::model::{AttentionLayer, DocCache, EncoderKind, ModelState, Pooling};
use super::tensor::{axpy, Matrix};
use super::EncoderError;

/// Parameter gradients. Embedding rows are sparse: only rows touched by
/// the batch are present.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embeddings: BTreeMap<usize, Vec<f64>>,
    pub layers: Vec<AttentionLayer>,
    pub w: Matrix,
    pub b: f64,
}

/// Squared norms by parameter group.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroupNorms {
    pub embeddings: f64,
    pub attention: f64,
    pub head: f64,
}

impl GroupNorms {
    pub fn total(&self) -> f64 {
        (self.embeddings.powi(2) + self.attention.powi(2) + self.head.powi(2)).sqrt()
    }
}

impl Gradients {
    pub fn zeros(state: &ModelState) -> Gradients {
        let cfg = state.config();
        let d = cfg.d;
        Gradients {
            embeddings: BTreeMap::new(),
            layers: (0..state.layers().len()).map(|_| AttentionLayer::zeros(cfg)).collect(),
            w: Matrix::zeros(d, d),
            b: 0.0,
        }
    }

    /// Sums `other` into `self` (deterministic: callers merge in a fixed order).
    pub fn accumulate(&mut self, other: &Gradients) {
        for (&row, g) in &other.embeddings {
            let e = self.embeddings.entry(row).or_insert_with(|| vec![0.0; g.len()]);
            axpy(1.0, g, e);
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (ta, tb) in a.tensors_mut().zip(b.tensors()) {
                ta.add_assign(tb);
            }
        }
        self.w.add_assign(&other.w);
        self.b += other.b;
    }

    pub fn scale(&mut self, s: f64) {
        self.embeddings.values_mut().for_each(|r| r.iter_mut().for_each(|x| *x *= s));
        for l in &mut self.layers {
            l.tensors_mut().for_each(|t| t.scale(s));
        }
        self.w.scale(s);
        self.b *= s;
    }

    /// L2 norm per group.
    pub fn norms(&self) -> GroupNorms {
        let sq = |xs: &[f64]| xs.iter().map(|x| x * x).sum::<f64>();
        GroupNorms {
            embeddings: self.embeddings.values().map(|r| sq(r)).sum::<f64>().sqrt(),
            attention: self.layers.iter().flat_map(|l| l.tensors()).map(|t| sq(t.data())).sum::<f64>().sqrt(),
            head: (sq(self.w.data()) + self.b * self.b).sqrt(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.embeddings.values().flatten().all(|x| x.is_finite())
            && self.layers.iter().flat_map(|l| l.tensors()).all(|t| t.data().iter().all(|x| x.is_finite()))
            && self.w.data().iter().all(|x| x.is_finite())
            && self.b.is_finite()
    }

    /// Dense copy in the order of [`ModelState::tensors`].
    pub fn to_dense(&self, state: &ModelState) -> Vec<Vec<f64>> {
        let d = state.config().d;
        let mut emb = vec![0.0; state.embeddings().rows() * d];
        for (&row, g) in &self.embeddings {
            emb[row * d..(row + 1) * d].copy_from_slice(g);
        }
        let mut out = vec![emb];
        for l in &self.layers {
            out.extend(l.tensors().map(|t| t.data().to_vec()));
        }
        out.push(self.w.data().to_vec());
        out.push(vec![self.b]);
        out
    }
}

/// Cached forward pass over a batch of statements and proofs.
#[derive(Debug, Clone)]
pub struct BatchForward {
    generation: u64,
    statements: Vec<DocCache>,
    proofs: Vec<DocCache>,
    /// `scores[i][j] = score(statement i, proof j)`.
    pub scores: Matrix,
}

impl BatchForward {
    pub fn statement_vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.statements.iter().map(DocCache::pooled)
    }

    pub fn proof_vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.proofs.iter().map(DocCache::pooled)
    }
}

impl ModelState {
    /// Encodes every statement and proof once and scores all combinations.
    pub fn forward_batch(&self, statements: &[&[Token]], proofs: &[&[Token]]) -> Result<BatchForward, EncoderError> {
        let statements: Vec<DocCache> = statements.iter().map(|d| self.forward_doc(d)).collect::<Result<_, _>>()?;
        let proofs: Vec<DocCache> = proofs.iter().map(|d| self.forward_doc(d)).collect::<Result<_, _>>()?;
        let d = self.config().d;
        let s = stack(&statements, d);
        let p = stack(&proofs, d);
        let mut scores = s.matmul(&self.head().w).matmul_t(&p);
        scores.data_mut().iter_mut().for_each(|x| *x += self.head().b);
        Ok(BatchForward { generation: self.generation(), statements, proofs, scores })
    }

    /// Back-propagates `d_scores` (same shape as `fwd.scores`).
    pub fn backward(&self, fwd: &BatchForward, d_scores: &Matrix) -> Result<Gradients, EncoderError> {
        if fwd.generation != self.generation() {
            return Err(EncoderError::StaleCache);
        }
        if (d_scores.rows(), d_scores.cols()) != (fwd.scores.rows(), fwd.scores.cols()) {
            return Err(EncoderError::DimensionMismatch {
                expected: fwd.scores.rows() * fwd.scores.cols(),
                got: d_scores.rows() * d_scores.cols(),
            });
        }
        let d = self.config().d;
        let w = &self.head().w;
        let s = stack(&fwd.statements, d);
        let p = stack(&fwd.proofs, d);

        let mut grads = Gradients::zeros(self);
        grads.b = d_scores.data().iter().sum();
        // dW = Sᵀ · dM · P
        grads.w = s.t_matmul(&d_scores.matmul(&p));
        // dS = dM · P · Wᵀ ;  dP = dMᵀ · S · W
        let d_s = d_scores.matmul(&p.matmul_t(w));
        let d_p = d_scores.t_matmul(&s.matmul(w));

        for (i, cache) in fwd.statements.iter().enumerate() {
            self.backward_doc(cache, d_s.row(i), &mut grads);
        }
        for (j, cache) in fwd.proofs.iter().enumerate() {
            self.backward_doc(cache, d_p.row(j), &mut grads);
        }
        Ok(grads)
    }

    fn backward_doc(&self, cache: &DocCache, d_pooled: &[f64], grads: &mut Gradients) {
        let hidden = cache.inputs.last().expect("non-empty");
        let (n, d) = (hidden.rows(), hidden.cols());
        let mut dx = Matrix::zeros(n, d);
        match self.config().pooling {
            Pooling::Max => {
                for (c, (&r, &g)) in cache.argmax.iter().zip(d_pooled).enumerate() {
                    let v = dx.get(r, c);
                    dx.set(r, c, v + g);
                }
            }
            Pooling::Mean => {
                let inv = 1.0 / n as f64;
                for r in 0..n {
                    axpy(inv, d_pooled, dx.row_mut(r));
                }
            }
        }
        for l in (0..self.layers().len()).rev() {
            dx = self.attention_backward(l, cache, dx, &mut grads.layers[l]);
        }
        debug_assert!(self.config().kind == EncoderKind::SelfAttentive || cache.layers.is_empty());
        for (r, &id) in cache.ids.iter().enumerate() {
            let row = grads.embeddings.entry(id).or_insert_with(|| vec![0.0; d]);
            axpy(1.0, dx.row(r), row);
        }
    }

    /// Returns the gradient with respect to the layer input.
    fn attention_backward(&self, l: usize, cache: &DocCache, dy: Matrix, g: &mut AttentionLayer) -> Matrix {
        let layer = &self.layers()[l];
        let lc = &cache.layers[l];
        let x = &cache.inputs[l];
        let cfg = self.config();
        let d_v = cfg.d_v();
        let scale = 1.0 / (cfg.d_k as f64).sqrt();
        let n = x.rows();

        g.wo.add_assign(&lc.concat.t_matmul(&dy));
        let d_concat = dy.matmul_t(&layer.wo);
        let mut dx = dy;

        for h in 0..cfg.heads {
            let mut d_head = Matrix::zeros(n, d_v);
            for r in 0..n {
                d_head.row_mut(r).copy_from_slice(&d_concat.row(r)[h * d_v..(h + 1) * d_v]);
            }
            let attn = &lc.attn[h];
            let d_attn = d_head.matmul_t(&lc.v[h]);
            let d_v_mat = attn.t_matmul(&d_head);
            // softmax backward, folded with the 1/√d_k scaling
            let mut d_logits = Matrix::zeros(n, n);
            for r in 0..n {
                let a = attn.row(r);
                let da = d_attn.row(r);
                let inner: f64 = a.iter().zip(da).map(|(x, y)| x * y).sum();
                for (c, out) in d_logits.row_mut(r).iter_mut().enumerate() {
                    *out = a[c] * (da[c] - inner) * scale;
                }
            }
            let d_q = d_logits.matmul(&lc.k[h]);
            let d_k = d_logits.t_matmul(&lc.q[h]);

            g.wq[h].add_assign(&x.t_matmul(&d_q));
            g.wk[h].add_assign(&x.t_matmul(&d_k));
            g.wv[h].add_assign(&x.t_matmul(&d_v_mat));
            dx.add_assign(&d_q.matmul_t(&layer.wq[h]));
            dx.add_assign(&d_k.matmul_t(&layer.wk[h]));
            dx.add_assign(&d_v_mat.matmul_t(&layer.wv[h]));
        }
        dx
    }
}

fn stack(caches: &[DocCache], d: usize) -> Matrix {
    let mut m = Matrix::zeros(caches.len(), d);
    for (i, c) in caches.iter().enumerate() {
        m.row_mut(i).copy_from_slice(c.pooled());
    }
    m
}
