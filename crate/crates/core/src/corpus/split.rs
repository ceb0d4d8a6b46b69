use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Corpus, CorpusError, PairRecord, SplitTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Pairs shuffled independently; one article may span splits.
    Mixed,
    /// All pairs of an article land in the same split.
    Unmixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub mode: SplitMode,
    /// Train, dev, test fractions.
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(mode: SplitMode, seed: u64) -> SplitSpec {
        SplitSpec { mode, ratios: [0.8, 0.1, 0.1], seed }
    }

    fn validate(&self) -> Result<(), CorpusError> {
        let sum: f64 = self.ratios.iter().sum();
        if self.ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(CorpusError::BadRatios(self.ratios));
        }
        Ok(())
    }
}

/// Splits into (train, dev, test). Within each output the input order is kept.
pub fn split_corpus(corpus: &Corpus, spec: &SplitSpec) -> Result<(Corpus, Corpus, Corpus), CorpusError> {
    spec.validate()?;
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let bucket_of = match spec.mode {
        SplitMode::Mixed => mixed_buckets(corpus.len(), spec.ratios, &mut rng),
        SplitMode::Unmixed => unmixed_buckets(corpus.pairs(), spec.ratios, &mut rng)?,
    };

    let mut parts: [Vec<PairRecord>; 3] = Default::default();
    for (pair, &b) in corpus.pairs().iter().zip(&bucket_of) {
        parts[b].push(pair.clone());
    }
    let [train, dev, test] = parts;
    Ok((
        Corpus::from_parts_unchecked(train, SplitTag::Train),
        Corpus::from_parts_unchecked(dev, SplitTag::Dev),
        Corpus::from_parts_unchecked(test, SplitTag::Test),
    ))
}

fn mixed_buckets(n: usize, ratios: [f64; 3], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let n_dev = (ratios[1] * n as f64).floor() as usize;
    let n_test = (ratios[2] * n as f64).floor() as usize;
    let n_train = n - n_dev - n_test;
    let mut bucket_of = vec![0; n];
    for (rank, &idx) in order.iter().enumerate() {
        bucket_of[idx] = if rank < n_train {
            0
        } else if rank < n_train + n_dev {
            1
        } else {
            2
        };
    }
    bucket_of
}

fn unmixed_buckets(pairs: &[PairRecord], ratios: [f64; 3], rng: &mut ChaCha8Rng) -> Result<Vec<usize>, CorpusError> {
    let mut articles: Vec<&str> = Vec::new();
    let mut members: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, p) in pairs.iter().enumerate() {
        if p.article_id.trim().is_empty() {
            return Err(CorpusError::MissingArticleIds(p.pair_id.clone()));
        }
        let entry = members.entry(p.article_id.as_str()).or_default();
        if entry.is_empty() {
            articles.push(p.article_id.as_str());
        }
        entry.push(i);
    }
    articles.shuffle(rng);

    let n = pairs.len() as f64;
    let targets = ratios.map(|r| r * n);
    let mut counts = [0usize; 3];
    let mut bucket_of = vec![0; pairs.len()];
    for a in articles {
        let mut best = 0;
        let mut best_deficit = f64::NEG_INFINITY;
        for (b, target) in targets.iter().enumerate() {
            let deficit = target - counts[b] as f64;
            if deficit > best_deficit {
                best = b;
                best_deficit = deficit;
            }
        }
        for &i in &members[a] {
            bucket_of[i] = best;
        }
        counts[best] += members[a].len();
    }
    Ok(bucket_of)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;

    fn corpus(articles: &[(&str, usize)]) -> Corpus {
        let mut pairs = Vec::new();
        for (a, count) in articles {
            for k in 0..*count {
                pairs.push(PairRecord {
                    pair_id: format!("{a}-{k}"),
                    article_id: a.to_string(),
                    categories: vec![],
                    statement: vec![Token::text("s").unwrap()],
                    proof: vec![Token::text("p").unwrap()],
                });
            }
        }
        Corpus::new(pairs, SplitTag::Unsplit).unwrap()
    }

    #[test]
    fn mixed_sizes_floor() {
        let c = corpus(&[("a", 10)]);
        let (tr, dv, te) = split_corpus(&c, &SplitSpec::new(SplitMode::Mixed, 3)).unwrap();
        assert_eq!((tr.len(), dv.len(), te.len()), (8, 1, 1));
        assert_eq!(tr.split_tag, SplitTag::Train);
    }

    #[test]
    fn unmixed_articles_stay_together() {
        let c = corpus(&[("x", 5), ("y", 3), ("z", 2)]);
        for seed in 0..50 {
            let (tr, dv, te) = split_corpus(&c, &SplitSpec::new(SplitMode::Unmixed, seed)).unwrap();
            for (art, _) in [("x", 5), ("y", 3), ("z", 2)] {
                let hits = [&tr, &dv, &te].iter().filter(|s| s.pairs().iter().any(|p| p.article_id == art)).count();
                assert_eq!(hits, 1, "article {art} spans splits for seed {seed}");
            }
            assert_eq!(tr.len() + dv.len() + te.len(), 10);
        }
    }

    #[test]
    fn errors() {
        let c = corpus(&[("a", 3)]);
        let mut spec = SplitSpec::new(SplitMode::Mixed, 0);
        spec.ratios = [0.5, 0.5, 0.5];
        assert!(matches!(split_corpus(&c, &spec), Err(CorpusError::BadRatios(_))));
        assert!(matches!(
            split_corpus(&Corpus::default(), &SplitSpec::new(SplitMode::Mixed, 0)),
            Err(CorpusError::EmptyCorpus)
        ));
        let blank = corpus(&[(" ", 2)]);
        assert!(matches!(
            split_corpus(&blank, &SplitSpec::new(SplitMode::Unmixed, 0)),
            Err(CorpusError::MissingArticleIds(_))
        ));
    }
}
