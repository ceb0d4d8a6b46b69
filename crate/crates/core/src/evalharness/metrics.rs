use crate::assignment::ScoreMatrix;
use crate::corpus::Corpus;
use crate::decoding::{
    build_score_matrix, decode_global, decode_local_depth, MatchResult, Pruning, RankingResult, DEFAULT_BLOCK_ROWS,
};
use crate::encoders::PairScorer;

use super::EvalError;

/// Mean reciprocal rank of 1-based gold ranks.
pub fn mrr(gold_ranks: &[usize]) -> Result<f64, EvalError> {
    if gold_ranks.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if gold_ranks.contains(&0) {
        return Err(EvalError::BadRank);
    }
    Ok(gold_ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / gold_ranks.len() as f64)
}

/// Fraction of statements whose gold proof is ranked first.
pub fn accuracy_local(result: &RankingResult) -> f64 {
    if result.is_empty() {
        return 0.0;
    }
    result.gold_rank.iter().filter(|&&r| r == 1).count() as f64 / result.len() as f64
}

/// Fraction of statements matched to their own proof.
pub fn accuracy_global(result: &MatchResult) -> f64 {
    result.accuracy()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    /// Absent for global decoding.
    pub mrr: Option<f64>,
    pub accuracy: f64,
    pub n: usize,
}

impl MetricReport {
    pub fn local(result: &RankingResult) -> Result<MetricReport, EvalError> {
        Ok(MetricReport { mrr: Some(mrr(&result.gold_rank)?), accuracy: accuracy_local(result), n: result.len() })
    }

    pub fn global(result: &MatchResult) -> MetricReport {
        MetricReport { mrr: None, accuracy: accuracy_global(result), n: result.assignment.len() }
    }
}

/// Scores `corpus` with `scorer` and reports local MRR and accuracy.
pub fn evaluate_local<S: PairScorer>(scorer: &S, corpus: &Corpus) -> Result<MetricReport, EvalError> {
    let m = score_corpus(scorer, corpus)?;
    MetricReport::local(&decode_local_depth(&m, 1))
}

/// Scores `corpus` with `scorer` and reports global accuracy.
pub fn evaluate_global<S: PairScorer>(scorer: &S, corpus: &Corpus, k: Pruning) -> Result<MetricReport, EvalError> {
    let m = score_corpus(scorer, corpus)?;
    Ok(MetricReport::global(&decode_global(&m, k)?))
}

pub fn score_corpus<S: PairScorer>(scorer: &S, corpus: &Corpus) -> Result<ScoreMatrix, EvalError> {
    let statements: Vec<_> = corpus.statements().collect();
    let proofs: Vec<_> = corpus.proofs().collect();
    Ok(build_score_matrix(scorer, &statements, &proofs, DEFAULT_BLOCK_ROWS)?)
}

/// How many proofs were chosen (as local top-1) by how many statements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignHistogram {
    pub n: usize,
    /// Times each proof was ranked first.
    pub chosen: Vec<usize>,
}

/// Cumulative bucket thresholds, largest first.
pub const CUMULATIVE_BUCKETS: [usize; 4] = [20, 10, 5, 2];

impl AssignHistogram {
    /// Proofs chosen by at least `t` statements.
    pub fn at_least(&self, t: usize) -> usize {
        self.chosen.iter().filter(|&&c| c >= t).count()
    }

    pub fn exactly_one(&self) -> usize {
        self.chosen.iter().filter(|&&c| c == 1).count()
    }

    pub fn none(&self) -> usize {
        self.chosen.iter().filter(|&&c| c == 0).count()
    }

    /// (label, count) rows in the cumulative presentation: ≥20, ≥10, ≥5, ≥2, =1, <1.
    pub fn cumulative(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> =
            CUMULATIVE_BUCKETS.iter().map(|&t| (format!(">={t}"), self.at_least(t))).collect();
        out.push(("=1".into(), self.exactly_one()));
        out.push(("<1".into(), self.none()));
        out
    }

    /// Disjoint buckets: ≥20, 10–19, 5–9, 2–4, =1, <1.
    pub fn non_cumulative(&self) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        let mut upper = usize::MAX;
        for &t in &CUMULATIVE_BUCKETS {
            let count = self.chosen.iter().filter(|&&c| c >= t && c < upper).count();
            let label = if upper == usize::MAX { format!(">={t}") } else { format!("{t}-{}", upper - 1) };
            out.push((label, count));
            upper = t;
        }
        out.push(("=1".into(), self.exactly_one()));
        out.push(("<1".into(), self.none()));
        out
    }

    /// Aligned table with counts and percentages to one decimal.
    pub fn render(&self) -> String {
        let mut s = format!("{:<8}{:>10}{:>8}\n", "bucket", "proofs", "%");
        for (label, count) in self.cumulative() {
            let pct = if self.n == 0 { 0.0 } else { 100.0 * count as f64 / self.n as f64 };
            s.push_str(&format!("{label:<8}{count:>10}{pct:>8.1}\n"));
        }
        s
    }
}

pub fn assignment_distribution(result: &RankingResult) -> AssignHistogram {
    let n = result.len();
    let mut chosen = vec![0; n];
    for r in &result.rankings {
        chosen[r[0].0] += 1;
    }
    AssignHistogram { n, chosen }
}
