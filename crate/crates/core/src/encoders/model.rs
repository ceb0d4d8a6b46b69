use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Token;

use super::tensor::{axpy, dot, softmax_rows, Matrix};
use super::vocab::Vocabulary;
use super::{EncoderError, PairScorer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    TfIdf,
    PooledEmbedding,
    SelfAttentive,
}

impl EncoderKind {
    pub fn parse(s: &str) -> Option<EncoderKind> {
        match s {
            "tfidf" => Some(EncoderKind::TfIdf),
            "pooled" | "pooled-embedding" => Some(EncoderKind::PooledEmbedding),
            "attention" | "self-attentive" => Some(EncoderKind::SelfAttentive),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EncoderKind::TfIdf => "tfidf",
            EncoderKind::PooledEmbedding => "pooled",
            EncoderKind::SelfAttentive => "attention",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pooling {
    Max,
    Mean,
}

impl Pooling {
    pub fn parse(s: &str) -> Option<Pooling> {
        match s {
            "max" => Some(Pooling::Max),
            "mean" => Some(Pooling::Mean),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pooling::Max => "max",
            Pooling::Mean => "mean",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    /// Embedding and hidden size.
    pub d: usize,
    pub layers: usize,
    pub heads: usize,
    /// Per-head query/key size. Values use `d / heads`.
    pub d_k: usize,
    pub pooling: Pooling,
    /// Add sinusoidal position encodings (self-attentive encoder only).
    pub positional: bool,
}

impl EncoderConfig {
    /// Two layers, four heads, d = 300, d_k = 128.
    pub fn reference() -> EncoderConfig {
        EncoderConfig {
            kind: EncoderKind::SelfAttentive,
            d: 300,
            layers: 2,
            heads: 4,
            d_k: 128,
            pooling: Pooling::Max,
            positional: true,
        }
    }

    /// Small default suitable for CPU experiments.
    pub fn desk() -> EncoderConfig {
        EncoderConfig { d: 64, layers: 1, heads: 2, d_k: 32, ..EncoderConfig::reference() }
    }

    pub fn pooled(d: usize, pooling: Pooling) -> EncoderConfig {
        EncoderConfig { kind: EncoderKind::PooledEmbedding, d, layers: 0, heads: 1, d_k: 1, pooling, positional: false }
    }

    pub fn validate(&self) -> Result<(), EncoderError> {
        let bad = |m: String| Err(EncoderError::BadConfig(m));
        if self.d == 0 {
            return bad("d must be positive".into());
        }
        if self.kind == EncoderKind::SelfAttentive {
            if self.heads == 0 || !self.d.is_multiple_of(self.heads) {
                return bad(format!("d = {} not divisible by heads = {}", self.d, self.heads));
            }
            if self.d_k == 0 {
                return bad("d_k must be positive".into());
            }
        }
        Ok(())
    }

    /// Attention layers actually run for this kind.
    pub fn effective_layers(&self) -> usize {
        match self.kind {
            EncoderKind::SelfAttentive => self.layers,
            _ => 0,
        }
    }

    pub fn d_v(&self) -> usize {
        self.d / self.heads.max(1)
    }
}

/// One multi-head self-attention block with a residual connection.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionLayer {
    /// Per head, d × d_k.
    pub wq: Vec<Matrix>,
    /// Per head, d × d_k.
    pub wk: Vec<Matrix>,
    /// Per head, d × d_v.
    pub wv: Vec<Matrix>,
    /// d × d output projection over the concatenated heads.
    pub wo: Matrix,
}

impl AttentionLayer {
    pub fn zeros(cfg: &EncoderConfig) -> AttentionLayer {
        let (d, h) = (cfg.d, cfg.heads);
        AttentionLayer {
            wq: vec![Matrix::zeros(d, cfg.d_k); h],
            wk: vec![Matrix::zeros(d, cfg.d_k); h],
            wv: vec![Matrix::zeros(d, cfg.d_v()); h],
            wo: Matrix::zeros(d, d),
        }
    }

    pub fn tensors(&self) -> impl Iterator<Item = &Matrix> {
        self.wq.iter().chain(&self.wk).chain(&self.wv).chain(std::iter::once(&self.wo))
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Matrix> {
        self.wq.iter_mut().chain(self.wk.iter_mut()).chain(self.wv.iter_mut()).chain(std::iter::once(&mut self.wo))
    }
}

/// `score(s, p) = sᵀ W p + b`
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearHead {
    pub w: Matrix,
    pub b: f64,
}

impl BilinearHead {
    pub fn score(&self, s: &[f64], p: &[f64]) -> Result<f64, EncoderError> {
        let d = self.w.rows();
        for v in [s, p] {
            if v.len() != d {
                return Err(EncoderError::DimensionMismatch { expected: d, got: v.len() });
            }
        }
        Ok(dot(s, &self.w.mat_vec(p)) + self.b)
    }
}

static GENERATION: AtomicU64 = AtomicU64::new(1);

fn next_generation() -> u64 {
    GENERATION.fetch_add(1, Ordering::Relaxed)
}

/// Vocabulary, encoder parameters and bilinear head.
#[derive(Debug, Clone)]
pub struct ModelState {
    vocab: Vocabulary,
    config: EncoderConfig,
    embeddings: Matrix,
    layers: Vec<AttentionLayer>,
    head: BilinearHead,
    rng_seed: u64,
    generation: u64,
}

impl PartialEq for ModelState {
    fn eq(&self, other: &Self) -> bool {
        self.vocab == other.vocab
            && self.config == other.config
            && self.embeddings == other.embeddings
            && self.layers == other.layers
            && self.head == other.head
            && self.rng_seed == other.rng_seed
    }
}

pub(crate) fn round_to_f32(x: f64) -> f64 {
    x as f32 as f64
}

impl ModelState {
    /// Seeded initialization: unit-variance uniform embeddings (±√3),
    /// projections uniform in ±1/√d, `W = I`, `b = 0`. Values are rounded
    /// to f32.
    pub fn init(vocab: Vocabulary, config: EncoderConfig, seed: u64) -> Result<ModelState, EncoderError> {
        config.validate()?;
        if config.kind == EncoderKind::TfIdf {
            return Err(EncoderError::BadConfig("TF-IDF has no trainable parameters".into()));
        }
        let d = config.d;
        let bound = 1.0 / (d as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |m: &mut Matrix, bound: f64| {
            for x in m.data_mut() {
                *x = round_to_f32(rng.gen_range(-bound..bound));
            }
        };
        let mut embeddings = Matrix::zeros(vocab.len(), d);
        fill(&mut embeddings, 3f64.sqrt());
        let mut layers = Vec::with_capacity(config.effective_layers());
        for _ in 0..config.effective_layers() {
            let mut layer = AttentionLayer::zeros(&config);
            layer.tensors_mut().for_each(|t| fill(t, bound));
            layers.push(layer);
        }
        let w = Matrix::identity(d);
        Ok(ModelState {
            vocab,
            config,
            embeddings,
            layers,
            head: BilinearHead { w, b: 0.0 },
            rng_seed: seed,
            generation: next_generation(),
        })
    }

    /// Assembles a state from parts, checking shapes.
    pub fn from_parts(
        vocab: Vocabulary,
        config: EncoderConfig,
        embeddings: Matrix,
        layers: Vec<AttentionLayer>,
        head: BilinearHead,
        rng_seed: u64,
    ) -> Result<ModelState, EncoderError> {
        config.validate()?;
        let d = config.d;
        let shape_err = |what: &str| EncoderError::BadConfig(format!("{what} has the wrong shape"));
        if embeddings.rows() != vocab.len() || embeddings.cols() != d {
            return Err(shape_err("embedding table"));
        }
        if layers.len() != config.effective_layers() {
            return Err(shape_err("layer list"));
        }
        let template = AttentionLayer::zeros(&config);
        for layer in &layers {
            if layer.wq.len() != config.heads || layer.wk.len() != config.heads || layer.wv.len() != config.heads {
                return Err(shape_err("attention head list"));
            }
            for (a, b) in layer.tensors().zip(template.tensors()) {
                if (a.rows(), a.cols()) != (b.rows(), b.cols()) {
                    return Err(shape_err("attention projection"));
                }
            }
        }
        if (head.w.rows(), head.w.cols()) != (d, d) {
            return Err(shape_err("bilinear W"));
        }
        Ok(ModelState { vocab, config, embeddings, layers, head, rng_seed, generation: next_generation() })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn embeddings(&self) -> &Matrix {
        &self.embeddings
    }

    pub fn layers(&self) -> &[AttentionLayer] {
        &self.layers
    }

    pub fn head(&self) -> &BilinearHead {
        &self.head
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub(crate) fn generation(&self) -> u64 {
        self.generation
    }

    /// All parameter tensors in declared order: embeddings, per layer
    /// `wq`, `wk`, `wv` (all heads) then `wo`, then `W`, then `b`.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![self.embeddings.data()];
        for l in &self.layers {
            out.extend(l.tensors().map(Matrix::data));
        }
        out.push(self.head.w.data());
        out.push(std::slice::from_ref(&self.head.b));
        out
    }

    /// Mutable view in the order of [`tensors`](Self::tensors). Invalidates
    /// cached forward passes.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.generation = next_generation();
        let mut out: Vec<&mut [f64]> = vec![self.embeddings.data_mut()];
        for l in &mut self.layers {
            out.extend(l.tensors_mut().map(Matrix::data_mut));
        }
        out.push(self.head.w.data_mut());
        out.push(std::slice::from_mut(&mut self.head.b));
        out
    }

    pub fn head_mut(&mut self) -> &mut BilinearHead {
        self.generation = next_generation();
        &mut self.head
    }

    pub fn layers_mut(&mut self) -> &mut [AttentionLayer] {
        self.generation = next_generation();
        &mut self.layers
    }

    pub fn embeddings_mut(&mut self) -> &mut Matrix {
        self.generation = next_generation();
        &mut self.embeddings
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Runs the encoder on a document and keeps every intermediate needed
    /// for the backward pass.
    pub fn forward_doc(&self, doc: &[Token]) -> Result<DocCache, EncoderError> {
        if doc.is_empty() {
            return Err(EncoderError::EmptyDocument);
        }
        let ids = self.vocab.encode(doc);
        self.forward_ids(ids)
    }

    pub(crate) fn forward_ids(&self, ids: Vec<usize>) -> Result<DocCache, EncoderError> {
        if ids.is_empty() {
            return Err(EncoderError::EmptyDocument);
        }
        let d = self.config.d;
        let mut x = Matrix::zeros(ids.len(), d);
        for (r, &id) in ids.iter().enumerate() {
            x.row_mut(r).copy_from_slice(self.embeddings.row(id));
        }
        if self.config.kind == EncoderKind::SelfAttentive && self.config.positional {
            add_positions(&mut x);
        }
        let mut inputs = vec![x];
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (y, cache) = self.attention_forward(layer, inputs.last().expect("non-empty"));
            inputs.push(y);
            caches.push(cache);
        }
        let hidden = inputs.last().expect("non-empty");
        let (pooled, argmax) = pool(hidden, self.config.pooling);
        Ok(DocCache { ids, inputs, layers: caches, pooled, argmax })
    }

    fn attention_forward(&self, layer: &AttentionLayer, x: &Matrix) -> (Matrix, LayerCache) {
        let n = x.rows();
        let d_v = self.config.d_v();
        let inv_sqrt_dk = 1.0 / (self.config.d_k as f64).sqrt();
        let mut concat = Matrix::zeros(n, self.config.d);
        let mut cache = LayerCache::default();
        for h in 0..self.config.heads {
            let q = x.matmul(&layer.wq[h]);
            let k = x.matmul(&layer.wk[h]);
            let v = x.matmul(&layer.wv[h]);
            let mut attn = q.matmul_t(&k);
            attn.scale(inv_sqrt_dk);
            softmax_rows(&mut attn);
            let out = attn.matmul(&v);
            for r in 0..n {
                concat.row_mut(r)[h * d_v..(h + 1) * d_v].copy_from_slice(out.row(r));
            }
            cache.q.push(q);
            cache.k.push(k);
            cache.v.push(v);
            cache.attn.push(attn);
        }
        let mut y = concat.matmul(&layer.wo);
        y.add_assign(x);
        cache.concat = concat;
        (y, cache)
    }

    /// Fixed-size representation of a document.
    pub fn encode(&self, doc: &[Token]) -> Result<Vec<f64>, EncoderError> {
        Ok(self.forward_doc(doc)?.pooled)
    }

    pub fn score(&self, s: &[f64], p: &[f64]) -> Result<f64, EncoderError> {
        self.head.score(s, p)
    }
}

/// Sinusoidal position encodings added in place.
pub(crate) fn add_positions(x: &mut Matrix) {
    let d = x.cols();
    for pos in 0..x.rows() {
        let row = x.row_mut(pos);
        for (i, v) in row.iter_mut().enumerate() {
            let exponent = (2 * (i / 2)) as f64 / d as f64;
            let angle = pos as f64 / 10000f64.powf(exponent);
            *v += if i % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
}

/// Pools rows; for max pooling also returns the winning row per column,
/// ties going to the lowest position.
fn pool(h: &Matrix, pooling: Pooling) -> (Vec<f64>, Vec<usize>) {
    let (n, d) = (h.rows(), h.cols());
    match pooling {
        Pooling::Max => {
            let mut best = h.row(0).to_vec();
            let mut arg = vec![0; d];
            for r in 1..n {
                for (c, &v) in h.row(r).iter().enumerate() {
                    if v > best[c] {
                        best[c] = v;
                        arg[c] = r;
                    }
                }
            }
            (best, arg)
        }
        Pooling::Mean => {
            let mut acc = vec![0.0; d];
            for r in 0..n {
                axpy(1.0, h.row(r), &mut acc);
            }
            acc.iter_mut().for_each(|v| *v /= n as f64);
            (acc, Vec::new())
        }
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct LayerCache {
    pub q: Vec<Matrix>,
    pub k: Vec<Matrix>,
    pub v: Vec<Matrix>,
    pub attn: Vec<Matrix>,
    pub concat: Matrix,
}

/// Activations of one encoded document.
#[derive(Debug, Clone)]
pub struct DocCache {
    pub(crate) ids: Vec<usize>,
    /// Input to each layer; the last entry is the final hidden state.
    pub(crate) inputs: Vec<Matrix>,
    pub(crate) layers: Vec<LayerCache>,
    pub(crate) pooled: Vec<f64>,
    pub(crate) argmax: Vec<usize>,
}

impl DocCache {
    pub fn pooled(&self) -> &[f64] {
        &self.pooled
    }

    pub fn into_pooled(self) -> Vec<f64> {
        self.pooled
    }

    /// Attention probabilities of `head` in `layer` (rows are queries).
    pub fn attention(&self, layer: usize, head: usize) -> &Matrix {
        &self.layers[layer].attn[head]
    }
}

/// Proof encodings are stored pre-multiplied by `W`, so each cell of a
/// score matrix costs one dot product.
impl PairScorer for ModelState {
    type Encoding = Vec<f64>;

    fn encode_statement(&self, doc: &[Token]) -> Result<Vec<f64>, EncoderError> {
        self.encode(doc)
    }

    fn encode_proof(&self, doc: &[Token]) -> Result<Vec<f64>, EncoderError> {
        let p = self.encode(doc)?;
        Ok(self.head.w.mat_vec(&p))
    }

    fn score(&self, s: &Vec<f64>, wp: &Vec<f64>) -> f64 {
        dot(s, wp) + self.head.b
    }
}
