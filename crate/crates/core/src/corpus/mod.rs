//! Statement-proof corpora: tokens, records, the line-oriented file format,
//! MathML linearization, length filtering and train/dev/test splitting.

mod format;
mod mathml;
mod split;
mod token;

use std::collections::HashSet;

use thiserror::Error;

pub use format::{parse_corpus, parse_raw_record_line, read_corpus, render_corpus, write_corpus, RawToken};
pub use mathml::linearize_mathml;
pub use split::{split_corpus, SplitMode, SplitSpec};
pub use token::{Font, Token, TokenError, TokenKind};

/// Inclusive token-length window applied to both statements and proofs.
pub const MIN_TOKENS: usize = 20;
pub const MAX_TOKENS: usize = 500;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("unmixed split requires an article id on every pair (pair {0:?} has none)")]
    MissingArticleIds(String),
    #[error("duplicate pair id {0:?}")]
    DuplicatePairId(String),
    #[error("split ratios must be non-negative and sum to 1 (got {0:?})")]
    BadRatios([f64; 3]),
    #[error("line {line}, column {column}: {message}")]
    Format { line: usize, column: usize, message: String },
    #[error("malformed MathML: {0}")]
    MalformedXml(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One statement with its proof, plus provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRecord {
    pub pair_id: String,
    pub article_id: String,
    pub categories: Vec<String>,
    pub statement: Vec<Token>,
    pub proof: Vec<Token>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SplitTag {
    #[default]
    Unsplit,
    Train,
    Dev,
    Test,
}

impl SplitTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Unsplit => "unsplit",
            SplitTag::Train => "train",
            SplitTag::Dev => "dev",
            SplitTag::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<SplitTag> {
        match s {
            "unsplit" => Some(SplitTag::Unsplit),
            "train" => Some(SplitTag::Train),
            "dev" => Some(SplitTag::Dev),
            "test" => Some(SplitTag::Test),
            _ => None,
        }
    }
}

/// An ordered collection of pairs with distinct ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pairs: Vec<PairRecord>,
    pub split_tag: SplitTag,
}

impl Corpus {
    pub fn new(pairs: Vec<PairRecord>, split_tag: SplitTag) -> Result<Corpus, CorpusError> {
        let mut seen = HashSet::with_capacity(pairs.len());
        for p in &pairs {
            if !seen.insert(p.pair_id.as_str()) {
                return Err(CorpusError::DuplicatePairId(p.pair_id.clone()));
            }
        }
        Ok(Corpus { pairs, split_tag })
    }

    pub fn pairs(&self) -> &[PairRecord] {
        &self.pairs
    }

    pub fn into_pairs(self) -> Vec<PairRecord> {
        self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn statements(&self) -> impl Iterator<Item = &[Token]> {
        self.pairs.iter().map(|p| p.statement.as_slice())
    }

    pub fn proofs(&self) -> impl Iterator<Item = &[Token]> {
        self.pairs.iter().map(|p| p.proof.as_slice())
    }

    /// Applies `f` to every pair, keeping ids (and therefore uniqueness) intact.
    pub fn map_pairs<F>(&self, mut f: F) -> Corpus
    where
        F: FnMut(&PairRecord) -> PairRecord,
    {
        let pairs = self
            .pairs
            .iter()
            .map(|p| {
                let q = f(p);
                debug_assert_eq!(q.pair_id, p.pair_id);
                q
            })
            .collect();
        Corpus { pairs, split_tag: self.split_tag }
    }

    pub(crate) fn from_parts_unchecked(pairs: Vec<PairRecord>, split_tag: SplitTag) -> Corpus {
        Corpus { pairs, split_tag }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterVerdict {
    Keep,
    RejectTooShort,
    RejectTooLong,
}

/// Length filter. Too-short wins when one side is short and the other long.
pub fn filter_pair(record: &PairRecord) -> FilterVerdict {
    let lens = [record.statement.len(), record.proof.len()];
    if lens.iter().any(|&l| l < MIN_TOKENS) {
        FilterVerdict::RejectTooShort
    } else if lens.iter().any(|&l| l > MAX_TOKENS) {
        FilterVerdict::RejectTooLong
    } else {
        FilterVerdict::Keep
    }
}

/// Which token kinds are kept before vocabulary building and encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Channel {
    #[default]
    Both,
    TextOnly,
    MathOnly,
}

impl Channel {
    pub fn parse(s: &str) -> Option<Channel> {
        match s {
            "both" => Some(Channel::Both),
            "text" | "text-only" => Some(Channel::TextOnly),
            "math" | "math-only" => Some(Channel::MathOnly),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Both => "both",
            Channel::TextOnly => "text",
            Channel::MathOnly => "math",
        }
    }

    pub fn keeps(self, t: &Token) -> bool {
        match self {
            Channel::Both => true,
            Channel::TextOnly => t.kind() == TokenKind::Text,
            Channel::MathOnly => t.kind() == TokenKind::Math,
        }
    }

    pub fn apply(self, corpus: &Corpus) -> Corpus {
        if self == Channel::Both {
            return corpus.clone();
        }
        corpus.map_pairs(|p| PairRecord {
            statement: p.statement.iter().filter(|t| self.keeps(t)).cloned().collect(),
            proof: p.proof.iter().filter(|t| self.keeps(t)).cloned().collect(),
            ..p.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_with_lens(s: usize, p: usize) -> PairRecord {
        let tok = Token::text("w").unwrap();
        PairRecord {
            pair_id: "p".into(),
            article_id: "a".into(),
            categories: vec![],
            statement: vec![tok.clone(); s],
            proof: vec![tok; p],
        }
    }

    #[test]
    fn filter_boundaries() {
        assert_eq!(filter_pair(&pair_with_lens(19, 50)), FilterVerdict::RejectTooShort);
        assert_eq!(filter_pair(&pair_with_lens(20, 500)), FilterVerdict::Keep);
        assert_eq!(filter_pair(&pair_with_lens(40, 501)), FilterVerdict::RejectTooLong);
        assert_eq!(filter_pair(&pair_with_lens(501, 20)), FilterVerdict::RejectTooLong);
        assert_eq!(filter_pair(&pair_with_lens(10, 600)), FilterVerdict::RejectTooShort);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let p = pair_with_lens(20, 20);
        assert!(matches!(Corpus::new(vec![p.clone(), p], SplitTag::Unsplit), Err(CorpusError::DuplicatePairId(_))));
    }

    #[test]
    fn channel_filters() {
        let mut p = pair_with_lens(0, 0);
        p.statement = vec![Token::text("let").unwrap(), Token::math("x", Font::Normal).unwrap()];
        p.proof = vec![Token::math("y", Font::Bold).unwrap(), Token::text("so").unwrap()];
        let c = Corpus::new(vec![p], SplitTag::Unsplit).unwrap();
        let math = Channel::MathOnly.apply(&c);
        assert!(math.pairs()[0].statement.iter().all(Token::is_math));
        assert_eq!(math.pairs()[0].proof.len(), 1);
        let text = Channel::TextOnly.apply(&c);
        assert!(text.pairs()[0].proof.iter().all(|t| !t.is_math()));
        assert_eq!(Channel::Both.apply(&c), c);
    }
}
