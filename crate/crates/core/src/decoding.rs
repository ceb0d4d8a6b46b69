//! Local (per-statement ranking) and global (one-to-one matching) decoding.

use rayon::prelude::*;
use thiserror::Error;

use crate::assignment::{
    prune_topk, solve_dense, solve_sparse, Assignment, AssignmentError, ScoreMatrix, SparseScoreMatrix,
};
use crate::corpus::Token;
use crate::encoders::{EncoderError, PairScorer};

/// Rows computed per parallel block when building score matrices.
pub const DEFAULT_BLOCK_ROWS: usize = 256;

#[derive(Debug, Error)]
pub enum DecodingError {
    #[error("collections differ in size: {statements} statements, {proofs} proofs")]
    SizeMismatch { statements: usize, proofs: usize },
    #[error("cannot decode an empty collection")]
    EmptyCollection,
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Assignment(#[from] AssignmentError),
}

fn check_sizes(statements: usize, proofs: usize) -> Result<(), DecodingError> {
    if statements != proofs {
        return Err(DecodingError::SizeMismatch { statements, proofs });
    }
    if statements == 0 {
        return Err(DecodingError::EmptyCollection);
    }
    Ok(())
}

/// Scores every statement against every proof. Each text is encoded once;
/// rows are filled in parallel blocks of `block_rows`.
pub fn build_score_matrix<S, D>(
    scorer: &S,
    statements: &[D],
    proofs: &[D],
    block_rows: usize,
) -> Result<ScoreMatrix, DecodingError>
where
    S: PairScorer,
    D: AsRef<[Token]> + Sync,
{
    check_sizes(statements.len(), proofs.len())?;
    let n = statements.len();
    let proof_enc = proofs.par_iter().map(|p| scorer.encode_proof(p.as_ref())).collect::<Result<Vec<_>, _>>()?;
    let mut data = vec![0.0; n * n];
    for (block, out) in statements.chunks(block_rows.max(1)).zip(data.chunks_mut(block_rows.max(1) * n)) {
        let enc = block.par_iter().map(|s| scorer.encode_statement(s.as_ref())).collect::<Result<Vec<_>, _>>()?;
        out.par_chunks_mut(n).zip(&enc).for_each(|(row, s)| {
            for (cell, p) in row.iter_mut().zip(&proof_enc) {
                *cell = scorer.score(s, p);
            }
        });
    }
    Ok(ScoreMatrix::new(n, data)?)
}

/// Builds the top-k pruned matrix directly, never holding more than one
/// dense row per worker.
pub fn build_pruned_matrix<S, D>(
    scorer: &S,
    statements: &[D],
    proofs: &[D],
    k: usize,
) -> Result<SparseScoreMatrix, DecodingError>
where
    S: PairScorer,
    D: AsRef<[Token]> + Sync,
{
    check_sizes(statements.len(), proofs.len())?;
    let proof_enc = proofs.par_iter().map(|p| scorer.encode_proof(p.as_ref())).collect::<Result<Vec<_>, _>>()?;
    let stmt_enc = statements.par_iter().map(|s| scorer.encode_statement(s.as_ref())).collect::<Result<Vec<_>, _>>()?;
    Ok(SparseScoreMatrix::from_row_fn(statements.len(), k, |i, buf| {
        for (cell, p) in buf.iter_mut().zip(&proof_enc) {
            *cell = scorer.score(&stmt_enc[i], p);
        }
    })?)
}

/// Per-statement rankings; the gold proof of statement i is proof i.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingResult {
    /// Each list is ordered by (score desc, proof index asc). Lists hold all
    /// n proofs unless a shorter depth was requested.
    pub rankings: Vec<Vec<(usize, f64)>>,
    /// 1-based rank of the gold proof.
    pub gold_rank: Vec<usize>,
}

impl RankingResult {
    pub fn len(&self) -> usize {
        self.gold_rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gold_rank.is_empty()
    }

    /// Highest-ranked proof per statement.
    pub fn top1(&self) -> Vec<usize> {
        self.rankings.iter().map(|r| r[0].0).collect()
    }
}

/// 1 + (cells strictly above the gold score) + (earlier cells tied with it).
pub fn gold_rank(row: &[f64], gold: usize) -> usize {
    let g = row[gold];
    1 + row.iter().enumerate().filter(|&(j, &x)| x > g || (x == g && j < gold)).count()
}

/// Full local decoding.
pub fn decode_local(m: &ScoreMatrix) -> RankingResult {
    decode_local_depth(m, m.n())
}

/// Local decoding keeping only the first `depth` entries of each ranking.
pub fn decode_local_depth(m: &ScoreMatrix, depth: usize) -> RankingResult {
    let depth = depth.clamp(1, m.n().max(1));
    let (rankings, gold_rank) = (0..m.n())
        .into_par_iter()
        .map(|i| {
            let row = m.row(i);
            let mut order: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
            let cmp = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
            if depth < order.len() {
                order.select_nth_unstable_by(depth - 1, cmp);
                order.truncate(depth);
            }
            order.sort_unstable_by(cmp);
            (order, gold_rank(row, i))
        })
        .unzip();
    RankingResult { rankings, gold_rank }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pruning {
    All,
    TopK(usize),
}

impl std::fmt::Display for Pruning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Pruning::All => f.write_str("all"),
            Pruning::TopK(k) => write!(f, "{k}"),
        }
    }
}

impl std::str::FromStr for Pruning {
    type Err = String;

    fn from_str(s: &str) -> Result<Pruning, String> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(Pruning::All);
        }
        s.parse::<usize>().map(Pruning::TopK).map_err(|_| format!("expected a positive integer or 'all', got '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub assignment: Assignment,
    pub objective: f64,
    pub padded: bool,
    pub k_used: Pruning,
}

impl MatchResult {
    /// Fraction of statements matched to their own proof.
    pub fn accuracy(&self) -> f64 {
        let n = self.assignment.len();
        if n == 0 {
            return 0.0;
        }
        (n - self.assignment.misplaced()) as f64 / n as f64
    }
}

/// Global decoding: exact dense assignment for `All`, otherwise top-k
/// pruning followed by the sparse solver.
pub fn decode_global(m: &ScoreMatrix, k: Pruning) -> Result<MatchResult, AssignmentError> {
    match k {
        Pruning::All => {
            let (assignment, objective) = solve_dense(m);
            Ok(MatchResult { assignment, objective, padded: false, k_used: k })
        }
        Pruning::TopK(k) => Ok(decode_global_sparse(&prune_topk(m, k)?)),
    }
}

/// Global decoding over an already pruned matrix.
pub fn decode_global_sparse(s: &SparseScoreMatrix) -> MatchResult {
    let sol = solve_sparse(s);
    MatchResult {
        assignment: sol.assignment,
        objective: sol.objective,
        padded: sol.padded,
        k_used: Pruning::TopK(s.k()),
    }
}
