//! TF-IDF baseline: each statement and each proof is one document, and
//! pairs are scored by cosine similarity.

use std::collections::HashMap;

use crate::corpus::{Corpus, Token};

use super::{EncoderError, PairScorer};

/// Document frequencies over a document universe.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DfTable {
    n_docs: u64,
    term_id: HashMap<Token, u32>,
    df: Vec<u64>,
}

impl DfTable {
    pub fn from_documents<'a, I>(docs: I) -> DfTable
    where
        I: IntoIterator<Item = &'a [Token]>,
    {
        let mut table = DfTable::default();
        let mut seen: Vec<u64> = Vec::new();
        for doc in docs {
            table.n_docs += 1;
            for t in doc {
                let next = table.df.len() as u32;
                let id = *table.term_id.entry(t.clone()).or_insert(next);
                if id == next {
                    table.df.push(0);
                    seen.push(0);
                }
                if seen[id as usize] != table.n_docs {
                    seen[id as usize] = table.n_docs;
                    table.df[id as usize] += 1;
                }
            }
        }
        table
    }

    /// Statements and proofs of `corpus` as the universe.
    pub fn from_corpus(corpus: &Corpus) -> DfTable {
        DfTable::from_documents(corpus.statements().chain(corpus.proofs()))
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn df(&self, t: &Token) -> Option<u64> {
        self.term_id.get(t).map(|&i| self.df[i as usize])
    }

    /// `ln(N / (1 + df))`; may be negative for very common terms.
    pub fn idf(&self, t: &Token) -> Option<f64> {
        self.df(t).map(|df| (self.n_docs as f64 / (1.0 + df as f64)).ln())
    }
}

/// Sparse vector with entries sorted by term id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    pub entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn scaled(&self, s: f64) -> SparseVector {
        SparseVector { entries: self.entries.iter().map(|&(t, w)| (t, w * s)).collect() }
    }
}

/// Cosine similarity; 0 when either side is the zero vector.
pub fn cosine(u: &SparseVector, v: &SparseVector) -> f64 {
    let denom = u.norm() * v.norm();
    if denom == 0.0 {
        0.0
    } else {
        u.dot(v) / denom
    }
}

/// `tf(t, doc) · ln(N / (1 + df(t)))`; tokens outside the universe are dropped.
pub fn tfidf_encode(doc: &[Token], stats: &DfTable) -> Result<SparseVector, EncoderError> {
    if stats.n_docs == 0 {
        return Err(EncoderError::EmptyStats);
    }
    let mut tf: HashMap<u32, u64> = HashMap::new();
    for t in doc {
        if let Some(&id) = stats.term_id.get(t) {
            *tf.entry(id).or_default() += 1;
        }
    }
    let n = stats.n_docs as f64;
    let mut entries: Vec<(u32, f64)> =
        tf.into_iter().map(|(id, c)| (id, c as f64 * (n / (1.0 + stats.df[id as usize] as f64)).ln())).collect();
    entries.sort_by_key(|&(id, _)| id);
    Ok(SparseVector { entries })
}

/// Cosine-over-TF-IDF scorer.
#[derive(Debug, Clone)]
pub struct TfIdfScorer {
    pub stats: DfTable,
}

impl PairScorer for TfIdfScorer {
    type Encoding = SparseVector;

    fn encode_statement(&self, doc: &[Token]) -> Result<SparseVector, EncoderError> {
        tfidf_encode(doc, &self.stats)
    }

    fn encode_proof(&self, doc: &[Token]) -> Result<SparseVector, EncoderError> {
        tfidf_encode(doc, &self.stats)
    }

    fn score(&self, s: &SparseVector, p: &SparseVector) -> f64 {
        cosine(s, p)
    }
}
