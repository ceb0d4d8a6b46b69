//! Maximum-weight linear assignment over square score matrices.
//!
//! All public solvers maximize the total score; internally the dense and
//! sparse solvers minimize negated scores. Three solvers are provided:
//! [`solve_brute`] enumerates permutations and serves as the oracle,
//! [`solve_dense`] is an O(n³) shortest-augmenting-path Hungarian method,
//! and [`solve_sparse`] runs shortest augmenting paths over top-k pruned rows.

mod brute;
mod dense;
mod sparse;

use thiserror::Error;

pub use brute::{solve_brute, BRUTE_MAX_N};
pub use dense::solve_dense;
pub use sparse::{prune_topk, solve_sparse, SparseSolution, SENTINEL_OFFSET};

#[derive(Debug, Error, PartialEq)]
pub enum AssignmentError {
    #[error("brute-force solver limited to n <= {max}, got n = {n}")]
    TooLarge { n: usize, max: usize },
    #[error("k must lie in [1, {n}], got {k}")]
    BadK { k: usize, n: usize },
    #[error("score matrix must be square: {rows} rows, {cols} values per row")]
    NotSquare { rows: usize, cols: usize },
    #[error("non-finite score at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("invalid sparse row {row}: {message}")]
    InvalidSparse { row: usize, message: String },
}

/// Dense n×n score table; rows are statements, columns proofs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    n: usize,
    data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<ScoreMatrix, AssignmentError> {
        if data.len() != n * n {
            return Err(AssignmentError::NotSquare { rows: n, cols: data.len().checked_div(n).unwrap_or(data.len()) });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(AssignmentError::NonFinite { row: pos / n, col: pos % n });
        }
        Ok(ScoreMatrix { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<ScoreMatrix, AssignmentError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(AssignmentError::NotSquare { rows: n, cols: r.len() });
            }
            data.extend_from_slice(r);
        }
        ScoreMatrix::new(n, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> ScoreMatrix {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.get(i, j);
            }
        }
        ScoreMatrix { n, data }
    }

    /// Applies `f` to every entry. `f` must keep values finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScoreMatrix {
        let data: Vec<f64> = self.data.iter().map(|&x| f(x)).collect();
        debug_assert!(data.iter().all(|x| x.is_finite()));
        ScoreMatrix { n: self.n, data }
    }
}

/// Per-row candidate lists, each sorted by descending score with ties
/// broken by lower column index.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseScoreMatrix {
    n: usize,
    k: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseScoreMatrix {
    /// Validates ordering, column bounds, duplicates and finiteness.
    pub fn new(n: usize, k: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<SparseScoreMatrix, AssignmentError> {
        if rows.len() != n {
            return Err(AssignmentError::NotSquare { rows: rows.len(), cols: n });
        }
        for (i, row) in rows.iter().enumerate() {
            let bad = |m: &str| AssignmentError::InvalidSparse { row: i, message: m.to_owned() };
            if row.len() > k {
                return Err(bad("more than k entries"));
            }
            let mut seen = std::collections::HashSet::with_capacity(row.len());
            for (pos, &(j, s)) in row.iter().enumerate() {
                if j >= n {
                    return Err(bad("column out of range"));
                }
                if !s.is_finite() {
                    return Err(AssignmentError::NonFinite { row: i, col: j });
                }
                if !seen.insert(j) {
                    return Err(bad("duplicate column"));
                }
                if pos > 0 && !ranks_before(row[pos - 1], (j, s)) {
                    return Err(bad("entries not sorted by descending score"));
                }
            }
        }
        Ok(SparseScoreMatrix { n, k, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Builds a pruned matrix without materializing the dense one: `fill`
    /// writes the full score row `i` into the buffer it is given.
    pub fn from_row_fn<F>(n: usize, k: usize, fill: F) -> Result<SparseScoreMatrix, AssignmentError>
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        use rayon::prelude::*;
        if k == 0 || k > n {
            return Err(AssignmentError::BadK { k, n });
        }
        let rows: Result<Vec<_>, _> = (0..n)
            .into_par_iter()
            .map_init(
                || vec![0.0; n],
                |buf, i| {
                    fill(i, buf);
                    if let Some(j) = buf.iter().position(|x| !x.is_finite()) {
                        return Err(AssignmentError::NonFinite { row: i, col: j });
                    }
                    Ok(sparse::top_k_row(buf, k))
                },
            )
            .collect();
        Ok(SparseScoreMatrix { n, k, rows: rows? })
    }
}

/// `a` sorts strictly before `b`: higher score first, then lower column.
pub(crate) fn ranks_before(a: (usize, f64), b: (usize, f64)) -> bool {
    a.1 > b.1 || (a.1 == b.1 && a.0 < b.0)
}

/// `proof_of[i]` is the column given to row i.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub proof_of: Vec<usize>,
}

impl Assignment {
    pub fn identity(n: usize) -> Assignment {
        Assignment { proof_of: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.proof_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proof_of.is_empty()
    }

    /// True when `proof_of` is a permutation of `0..n`.
    pub fn is_permutation(&self) -> bool {
        let mut sorted = self.proof_of.clone();
        sorted.sort_unstable();
        sorted.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Total score of the chosen cells.
    pub fn objective(&self, m: &ScoreMatrix) -> f64 {
        self.proof_of.iter().enumerate().map(|(i, &j)| m.get(i, j)).sum()
    }

    /// Rows not assigned their own index.
    pub fn misplaced(&self) -> usize {
        self.proof_of.iter().enumerate().filter(|(i, j)| i != *j).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_validate() {
        assert!(matches!(ScoreMatrix::new(2, vec![0.0; 3]), Err(AssignmentError::NotSquare { .. })));
        assert_eq!(
            ScoreMatrix::new(2, vec![0.0, f64::NAN, 0.0, 0.0]),
            Err(AssignmentError::NonFinite { row: 0, col: 1 })
        );
        assert!(SparseScoreMatrix::new(2, 2, vec![vec![(0, 1.0), (1, 2.0)], vec![]]).is_err());
        assert!(SparseScoreMatrix::new(2, 2, vec![vec![(0, 1.0), (0, 0.5)], vec![]]).is_err());
        assert!(SparseScoreMatrix::new(2, 1, vec![vec![(0, 1.0), (1, 0.5)], vec![]]).is_err());
        assert!(SparseScoreMatrix::new(2, 2, vec![vec![(1, 1.0), (0, 1.0)], vec![]]).is_err());
        assert!(SparseScoreMatrix::new(2, 2, vec![vec![(0, 1.0), (1, 1.0)], vec![(1, 3.0)]]).is_ok());
    }

    #[test]
    fn assignment_helpers() {
        let a = Assignment { proof_of: vec![1, 0, 2] };
        assert!(a.is_permutation());
        assert_eq!(a.misplaced(), 2);
        assert!(!Assignment { proof_of: vec![1, 1, 2] }.is_permutation());
        let m = ScoreMatrix::from_rows(&[vec![1.0, 2.0, 0.0], vec![3.0, 4.0, 0.0], vec![0.0, 0.0, 5.0]]).unwrap();
        assert_eq!(a.objective(&m), 10.0);
    }
}
