use std::collections::HashMap;

use crate::corpus::{Corpus, Token};

use super::EncoderError;

pub const UNK: usize = 0;

/// Token-to-id table. Id 0 is reserved for unknown tokens; known tokens are
/// numbered from 1 by descending frequency, then first occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    id_of: HashMap<Token, usize>,
    tokens: Vec<Token>,
    counts: Vec<u64>,
    min_freq: u32,
}

impl Vocabulary {
    /// Builds from pre-ordered `(token, count)` entries; ids follow the order.
    pub fn from_entries(entries: Vec<(Token, u64)>, min_freq: u32) -> Vocabulary {
        let mut id_of = HashMap::with_capacity(entries.len());
        let mut tokens = Vec::with_capacity(entries.len());
        let mut counts = Vec::with_capacity(entries.len());
        for (t, c) in entries {
            if id_of.contains_key(&t) {
                continue;
            }
            id_of.insert(t.clone(), tokens.len() + 1);
            tokens.push(t);
            counts.push(c);
        }
        Vocabulary { id_of, tokens, counts, min_freq }
    }

    /// Number of ids, UNK included.
    pub fn len(&self) -> usize {
        self.tokens.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_freq(&self) -> u32 {
        self.min_freq
    }

    pub fn id(&self, token: &Token) -> usize {
        self.id_of.get(token).copied().unwrap_or(UNK)
    }

    /// `None` for UNK.
    pub fn token(&self, id: usize) -> Option<&Token> {
        id.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    pub fn count(&self, id: usize) -> Option<u64> {
        id.checked_sub(1).and_then(|i| self.counts.get(i)).copied()
    }

    pub fn encode(&self, doc: &[Token]) -> Vec<usize> {
        doc.iter().map(|t| self.id(t)).collect()
    }

    /// Known tokens with their training counts, in id order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, &Token, u64)> {
        self.tokens.iter().zip(&self.counts).enumerate().map(|(i, (t, &c))| (i + 1, t, c))
    }
}

/// Counts every statement and proof token; keeps those seen `min_freq` times.
pub fn build_vocab(corpus: &Corpus, min_freq: u32) -> Result<Vocabulary, EncoderError> {
    if corpus.is_empty() {
        return Err(EncoderError::EmptyCorpus);
    }
    if min_freq == 0 {
        return Err(EncoderError::BadConfig("min_freq must be at least 1".into()));
    }
    let mut first_seen: HashMap<&Token, (u64, usize)> = HashMap::new();
    let mut order = 0usize;
    for pair in corpus.pairs() {
        for t in pair.statement.iter().chain(&pair.proof) {
            let e = first_seen.entry(t).or_insert_with(|| {
                order += 1;
                (0, order)
            });
            e.0 += 1;
        }
    }
    let mut entries: Vec<(&Token, u64, usize)> =
        first_seen.into_iter().filter(|(_, (c, _))| *c >= min_freq as u64).map(|(t, (c, o))| (t, c, o)).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    Ok(Vocabulary::from_entries(entries.into_iter().map(|(t, c, _)| (t.clone(), c)).collect(), min_freq))
}
