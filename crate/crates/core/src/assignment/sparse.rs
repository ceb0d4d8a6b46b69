use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rayon::prelude::*;

use super::{ranks_before, Assignment, AssignmentError, ScoreMatrix, SparseScoreMatrix};

/// Distance below the smallest retained score given to padding edges.
pub const SENTINEL_OFFSET: f64 = 1e6;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSolution {
    pub assignment: Assignment,
    /// Sum over genuine (retained) edges only.
    pub objective: f64,
    /// Set when retained edges admit no perfect matching and sentinel edges
    /// were used.
    pub padded: bool,
}

/// Indices of the k best entries of `row`, by descending score then lower column.
pub(crate) fn top_k_row(row: &[f64], k: usize) -> Vec<(usize, f64)> {
    let cmp = |a: &(usize, f64), b: &(usize, f64)| {
        if ranks_before(*a, *b) {
            Ordering::Less
        } else if ranks_before(*b, *a) {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    };
    let mut entries: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
    if k < entries.len() {
        entries.select_nth_unstable_by(k - 1, cmp);
        entries.truncate(k);
    }
    entries.sort_unstable_by(cmp);
    entries
}

/// Keeps each row's k highest-scoring columns.
pub fn prune_topk(m: &ScoreMatrix, k: usize) -> Result<SparseScoreMatrix, AssignmentError> {
    let n = m.n();
    if k == 0 || k > n {
        return Err(AssignmentError::BadK { k, n });
    }
    let rows = (0..n).into_par_iter().map(|i| top_k_row(m.row(i), k)).collect();
    Ok(SparseScoreMatrix { n, k, rows })
}

#[derive(Clone, Copy)]
struct Edge {
    col: usize,
    cost: f64,
    genuine: bool,
}

/// Maximum-weight assignment restricted to retained edges.
///
/// Feasibility is checked first with Hopcroft–Karp. Rows left unmatched by
/// a maximum matching receive sentinel edges to every column they lack,
/// which restores a perfect matching while forcing as few sentinel edges
/// as possible. The assignment itself is computed by successive shortest
/// augmenting paths (Dijkstra with column potentials) on negated scores.
pub fn solve_sparse(m: &SparseScoreMatrix) -> SparseSolution {
    let n = m.n();
    let mut adj: Vec<Vec<Edge>> =
        m.rows().iter().map(|r| r.iter().map(|&(col, s)| Edge { col, cost: -s, genuine: true }).collect()).collect();

    let unmatched = unmatched_rows(n, m.rows());
    let padded = !unmatched.is_empty();
    if padded {
        let min_retained = m.rows().iter().flatten().map(|&(_, s)| s).fold(f64::INFINITY, f64::min);
        let min_retained = if min_retained.is_finite() { min_retained } else { 0.0 };
        let sentinel_cost = -(min_retained - SENTINEL_OFFSET);
        for i in unmatched {
            let mut present = vec![false; n];
            for e in &adj[i] {
                present[e.col] = true;
            }
            for (col, _) in present.iter().enumerate().filter(|(_, p)| !**p) {
                adj[i].push(Edge { col, cost: sentinel_cost, genuine: false });
            }
        }
    }

    let col_of_row = shortest_augmenting_paths(n, &adj);
    let mut objective = 0.0;
    for (i, &j) in col_of_row.iter().enumerate() {
        let e = adj[i].iter().find(|e| e.col == j).expect("assigned edge exists");
        if e.genuine {
            objective -= e.cost;
        }
    }
    SparseSolution { assignment: Assignment { proof_of: col_of_row }, objective, padded }
}

/// Rows left free by a maximum-cardinality matching (Hopcroft–Karp).
fn unmatched_rows(n: usize, rows: &[Vec<(usize, f64)>]) -> Vec<usize> {
    let mut col_of = vec![NONE; n];
    let mut row_of = vec![NONE; n];
    // greedy start
    for (i, r) in rows.iter().enumerate() {
        if let Some(&(j, _)) = r.iter().find(|&&(j, _)| row_of[j] == NONE) {
            col_of[i] = j;
            row_of[j] = i;
        }
    }
    let mut dist = vec![0usize; n];
    loop {
        // BFS layering from free rows
        let mut queue = VecDeque::new();
        for i in 0..n {
            if col_of[i] == NONE {
                dist[i] = 0;
                queue.push_back(i);
            } else {
                dist[i] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(i) = queue.pop_front() {
            for &(j, _) in &rows[i] {
                let r = row_of[j];
                if r == NONE {
                    found = true;
                } else if dist[r] == usize::MAX {
                    dist[r] = dist[i] + 1;
                    queue.push_back(r);
                }
            }
        }
        if !found {
            break;
        }
        // iterative DFS along the layers
        let mut next_edge = vec![0usize; n];
        for start in 0..n {
            if col_of[start] != NONE {
                continue;
            }
            let mut stack = vec![start];
            while let Some(&i) = stack.last() {
                if next_edge[i] >= rows[i].len() {
                    dist[i] = usize::MAX;
                    stack.pop();
                    continue;
                }
                let j = rows[i][next_edge[i]].0;
                next_edge[i] += 1;
                let r = row_of[j];
                if r == NONE {
                    // augment along the stack
                    let mut col = j;
                    for &row in stack.iter().rev() {
                        let prev = col_of[row];
                        col_of[row] = col;
                        row_of[col] = row;
                        col = prev;
                    }
                    break;
                } else if dist[r] == dist[i] + 1 {
                    stack.push(r);
                }
            }
        }
    }
    (0..n).filter(|&i| col_of[i] == NONE).collect()
}

#[derive(PartialEq)]
struct HeapItem {
    dist: f64,
    col: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap; ties pop the lower column first
        other.dist.total_cmp(&self.dist).then_with(|| other.col.cmp(&self.col))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-cost perfect matching on a feasible sparse bipartite graph.
///
/// Invariant: every assigned row's column minimizes `cost − v[col]` over
/// that row's edges, so reduced costs relative to the row's assigned value
/// are non-negative and Dijkstra applies.
fn shortest_augmenting_paths(n: usize, adj: &[Vec<Edge>]) -> Vec<usize> {
    let mut v = vec![0.0; n];
    let mut col_of = vec![NONE; n];
    let mut row_of = vec![NONE; n];
    let mut assigned_cost = vec![0.0; n];

    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NONE; n];
    let mut done = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut finalized: Vec<usize> = Vec::new();
    let mut heap = BinaryHeap::new();

    for free in 0..n {
        for &j in &touched {
            dist[j] = f64::INFINITY;
            pred[j] = NONE;
            done[j] = false;
        }
        touched.clear();
        finalized.clear();
        heap.clear();

        for e in &adj[free] {
            let d = e.cost - v[e.col];
            if d < dist[e.col] {
                if dist[e.col].is_infinite() {
                    touched.push(e.col);
                }
                dist[e.col] = d;
                pred[e.col] = free;
                heap.push(HeapItem { dist: d, col: e.col });
            }
        }

        let mut sink = NONE;
        let mut delta = 0.0;
        while let Some(HeapItem { dist: d, col: j }) = heap.pop() {
            if done[j] || d > dist[j] {
                continue;
            }
            done[j] = true;
            finalized.push(j);
            let i = row_of[j];
            if i == NONE {
                sink = j;
                delta = d;
                break;
            }
            let ui = assigned_cost[i] - v[j];
            for e in &adj[i] {
                if done[e.col] {
                    continue;
                }
                let nd = d + (e.cost - v[e.col] - ui);
                if nd < dist[e.col] {
                    if dist[e.col].is_infinite() {
                        touched.push(e.col);
                    }
                    dist[e.col] = nd;
                    pred[e.col] = i;
                    heap.push(HeapItem { dist: nd, col: e.col });
                }
            }
        }
        assert!(sink != NONE, "sparse instance must be feasible after padding");

        for &j in &finalized {
            v[j] += dist[j] - delta;
        }
        let mut j = sink;
        loop {
            let i = pred[j];
            let prev = col_of[i];
            col_of[i] = j;
            row_of[j] = i;
            assigned_cost[i] = adj[i].iter().find(|e| e.col == j).expect("edge").cost;
            if i == free {
                break;
            }
            j = prev;
        }
    }
    col_of
}

#[cfg(test)]
mod tests {
    use super::super::{solve_brute, solve_dense};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, rng: &mut ChaCha8Rng) -> ScoreMatrix {
        ScoreMatrix::new(n, (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn prune_keeps_best_columns() {
        let m = ScoreMatrix::from_rows(&[vec![5.0, 9.0, 1.0], vec![0.0; 3], vec![2.0, 2.0, 3.0]]).unwrap();
        let s = prune_topk(&m, 2).unwrap();
        assert_eq!(s.row(0), &[(1, 9.0), (0, 5.0)]);
        assert_eq!(s.row(1), &[(0, 0.0), (1, 0.0)]);
        assert_eq!(s.row(2), &[(2, 3.0), (0, 2.0)]);
        assert_eq!(prune_topk(&m, 0), Err(AssignmentError::BadK { k: 0, n: 3 }));
        assert_eq!(prune_topk(&m, 4), Err(AssignmentError::BadK { k: 4, n: 3 }));
        assert_eq!(prune_topk(&m, 3).unwrap().nnz(), 9);
    }

    #[test]
    fn row_fn_builder_matches_prune() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random(30, &mut rng);
        let streamed = SparseScoreMatrix::from_row_fn(30, 7, |i, buf| buf.copy_from_slice(m.row(i))).unwrap();
        assert_eq!(streamed, prune_topk(&m, 7).unwrap());
    }

    #[test]
    fn pigeonhole_instance_is_padded() {
        let s = SparseScoreMatrix::new(2, 1, vec![vec![(0, 3.0)], vec![(0, 1.0)]]).unwrap();
        let sol = solve_sparse(&s);
        assert!(sol.padded);
        assert!(sol.assignment.is_permutation());
        assert_eq!(sol.assignment.proof_of, vec![0, 1]);
        assert_eq!(sol.objective, 3.0);
    }

    #[test]
    fn unpruned_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = rng.gen_range(1..=40);
            let m = random(n, &mut rng);
            let sol = solve_sparse(&prune_topk(&m, n).unwrap());
            assert!(!sol.padded);
            assert!(sol.assignment.is_permutation());
            assert!((sol.objective - solve_dense(&m).1).abs() < 1e-9);
        }
    }

    #[test]
    fn small_instances_match_brute_force_over_retained_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..300 {
            let n = rng.gen_range(1..=6);
            let k = rng.gen_range(1..=n);
            let m = random(n, &mut rng);
            let s = prune_topk(&m, k).unwrap();
            let sol = solve_sparse(&s);
            // brute force over retained edges with a -inf mask
            let mut masked = vec![-1e9; n * n];
            for i in 0..n {
                for &(j, v) in s.row(i) {
                    masked[i * n + j] = v;
                }
            }
            let (_, best) = solve_brute(&ScoreMatrix::new(n, masked).unwrap()).unwrap();
            if best > -1e8 {
                assert!(!sol.padded);
                assert!((sol.objective - best).abs() < 1e-9);
            } else {
                assert!(sol.padded);
            }
            assert!(sol.assignment.is_permutation());
        }
    }

    #[test]
    fn pruned_objective_bounded_by_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let m = random(100, &mut rng);
            let (dense_a, dense_obj) = solve_dense(&m);
            let s = prune_topk(&m, 20).unwrap();
            let sol = solve_sparse(&s);
            assert!(sol.objective <= dense_obj + 1e-9);
            let survives = dense_a.proof_of.iter().enumerate().all(|(i, j)| s.row(i).iter().any(|e| e.0 == *j));
            if survives {
                assert!((sol.objective - dense_obj).abs() < 1e-9);
            }
        }
    }
}
