//! Binary model container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "PMM1"
//! vocab:   u32 min_freq, u32 n, then n × (u8 kind, u8 font, u64 count, u32 len, utf-8 bytes)
//! config:  u8 kind, u8 pooling, u8 positional, u32 d, u32 layers, u32 heads, u32 d_k
//! u64 rng_seed
//! tensors: u32 count, then count × (u32 rows, u32 cols, rows·cols × f32)
//! u64 FNV-1a checksum of every preceding byte
//! ```
//!
//! Tensors follow [`ModelState::tensors`] order. Parameters are kept at f32
//! precision in memory, so a write/read cycle is exact.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::corpus::{Font, Token, TokenKind};
use crate::seed::fnv1a64;

use super::model::{AttentionLayer, BilinearHead, EncoderConfig, EncoderKind, ModelState, Pooling};
use super::tensor::Matrix;
use super::vocab::Vocabulary;
use super::EncoderError;

pub const MODEL_MAGIC: &[u8; 4] = b"PMM1";

pub(crate) struct ByteWriter {
    pub buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> ByteWriter {
        ByteWriter { buf: Vec::new() }
    }
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }
    pub fn checksum(&mut self) {
        let h = fnv1a64(&self.buf);
        self.u64(h);
    }
}

pub(crate) struct ByteReader<'a> {
    pub buf: &'a [u8],
    pub pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> ByteReader<'a> {
        ByteReader { buf, pos: 0 }
    }
    pub fn take(&mut self, n: usize) -> Result<&'a [u8], EncoderError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| EncoderError::Format(format!("truncated at byte {} (wanted {n} more)", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    pub fn u8(&mut self) -> Result<u8, EncoderError> {
        Ok(self.take(1)?[0])
    }
    pub fn u32(&mut self) -> Result<u32, EncoderError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    pub fn u64(&mut self) -> Result<u64, EncoderError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    pub fn f32(&mut self) -> Result<f32, EncoderError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    pub fn f64(&mut self) -> Result<f64, EncoderError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    /// Verifies the checksum of `buf[start..pos]` stored next.
    pub fn verify_checksum(&mut self, start: usize) -> Result<(), EncoderError> {
        let expected = fnv1a64(&self.buf[start..self.pos]);
        let stored = self.u64()?;
        if stored != expected {
            return Err(EncoderError::Format(format!(
                "checksum mismatch (stored {stored:016x}, computed {expected:016x})"
            )));
        }
        Ok(())
    }
}

fn kind_code(k: EncoderKind) -> u8 {
    match k {
        EncoderKind::TfIdf => 0,
        EncoderKind::PooledEmbedding => 1,
        EncoderKind::SelfAttentive => 2,
    }
}

fn kind_from(c: u8) -> Result<EncoderKind, EncoderError> {
    match c {
        0 => Ok(EncoderKind::TfIdf),
        1 => Ok(EncoderKind::PooledEmbedding),
        2 => Ok(EncoderKind::SelfAttentive),
        _ => Err(EncoderError::Format(format!("unknown encoder kind {c}"))),
    }
}

/// Serializes the model container into bytes.
pub fn model_to_bytes(state: &ModelState) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.bytes(MODEL_MAGIC);
    let vocab = state.vocab();
    w.u32(vocab.min_freq());
    w.u32((vocab.len() - 1) as u32);
    for (_, t, count) in vocab.entries() {
        w.u8(match t.kind() {
            TokenKind::Text => 0,
            TokenKind::Math => 1,
        });
        w.u8(t.font().code());
        w.u64(count);
        w.u32(t.surface().len() as u32);
        w.bytes(t.surface().as_bytes());
    }
    let cfg = state.config();
    w.u8(kind_code(cfg.kind));
    w.u8(match cfg.pooling {
        Pooling::Max => 0,
        Pooling::Mean => 1,
    });
    w.u8(cfg.positional as u8);
    for v in [cfg.d, cfg.layers, cfg.heads, cfg.d_k] {
        w.u32(v as u32);
    }
    w.u64(state.rng_seed());

    let mut shapes: Vec<(usize, usize)> = vec![(state.embeddings().rows(), state.embeddings().cols())];
    for l in state.layers() {
        shapes.extend(l.tensors().map(|t| (t.rows(), t.cols())));
    }
    shapes.push((cfg.d, cfg.d));
    shapes.push((1, 1));
    let tensors = state.tensors();
    w.u32(tensors.len() as u32);
    for (t, (r, c)) in tensors.iter().zip(shapes) {
        w.u32(r as u32);
        w.u32(c as u32);
        for &x in t.iter() {
            w.f32(x as f32);
        }
    }
    w.checksum();
    w.buf
}

/// Parses a model container from the front of `bytes`; returns the state
/// and the number of bytes consumed (checkpoints carry an appendix).
pub fn model_from_bytes(bytes: &[u8]) -> Result<(ModelState, usize), EncoderError> {
    let mut r = ByteReader::new(bytes);
    if r.take(4)? != MODEL_MAGIC {
        return Err(EncoderError::Format("bad magic (expected PMM1)".into()));
    }
    let min_freq = r.u32()?;
    let n = r.u32()? as usize;
    let mut entries = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let kind = match r.u8()? {
            0 => TokenKind::Text,
            1 => TokenKind::Math,
            k => return Err(EncoderError::Format(format!("unknown token kind {k}"))),
        };
        let font = Font::from_code(r.u8()?).ok_or_else(|| EncoderError::Format("bad font code".into()))?;
        let count = r.u64()?;
        let len = r.u32()? as usize;
        let surface =
            std::str::from_utf8(r.take(len)?).map_err(|_| EncoderError::Format("token surface is not UTF-8".into()))?;
        let token = Token::new(kind, surface, font).map_err(|e| EncoderError::Format(e.to_string()))?;
        entries.push((token, count));
    }
    let vocab = Vocabulary::from_entries(entries, min_freq);
    if vocab.len() != n + 1 {
        return Err(EncoderError::Format("duplicate vocabulary entries".into()));
    }

    let kind = kind_from(r.u8()?)?;
    let pooling = match r.u8()? {
        0 => Pooling::Max,
        1 => Pooling::Mean,
        p => return Err(EncoderError::Format(format!("unknown pooling {p}"))),
    };
    let positional = r.u8()? != 0;
    let d = r.u32()? as usize;
    let layers = r.u32()? as usize;
    let heads = r.u32()? as usize;
    let d_k = r.u32()? as usize;
    let config = EncoderConfig { kind, d, layers, heads, d_k, pooling, positional };
    config.validate()?;
    let rng_seed = r.u64()?;

    let count = r.u32()? as usize;
    let mut tensors = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let len = rows
            .checked_mul(cols)
            .filter(|&l| l.saturating_mul(4) <= bytes.len())
            .ok_or_else(|| EncoderError::Format("tensor too large".into()))?;
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(r.f32()? as f64);
        }
        tensors.push(Matrix::from_vec(rows, cols, data));
    }
    r.verify_checksum(0)?;

    let expected = 3 + config.effective_layers() * (3 * heads + 1);
    if tensors.len() != expected {
        return Err(EncoderError::Format(format!(
            "expected {expected} tensors for this config, found {}",
            tensors.len()
        )));
    }
    let mut it = tensors.into_iter();
    let embeddings = it.next().expect("counted");
    let mut layer_list = Vec::with_capacity(config.effective_layers());
    for _ in 0..config.effective_layers() {
        let wq = it.by_ref().take(heads).collect();
        let wk = it.by_ref().take(heads).collect();
        let wv = it.by_ref().take(heads).collect();
        let wo = it.next().expect("counted");
        layer_list.push(AttentionLayer { wq, wk, wv, wo });
    }
    let w = it.next().expect("counted");
    let b = it.next().expect("counted");
    if (b.rows(), b.cols()) != (1, 1) {
        return Err(EncoderError::Format("bias tensor must be 1×1".into()));
    }
    let head = BilinearHead { w, b: b.get(0, 0) };
    let state = ModelState::from_parts(vocab, config, embeddings, layer_list, head, rng_seed)?;
    Ok((state, r.pos))
}

pub fn write_model(state: &ModelState, path: impl AsRef<Path>) -> Result<(), EncoderError> {
    let mut f = fs::File::create(path)?;
    f.write_all(&model_to_bytes(state))?;
    Ok(())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ModelState, EncoderError> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    Ok(model_from_bytes(&bytes)?.0)
}
