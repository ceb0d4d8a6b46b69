use super::{Assignment, ScoreMatrix};

/// Exact maximum-weight assignment in O(n³).
///
/// Shortest-augmenting-path Hungarian method on the negated scores, with
/// row potentials `u` and column potentials `v` (1-based, index 0 is the
/// virtual column used to start each augmentation).
pub fn solve_dense(m: &ScoreMatrix) -> (Assignment, f64) {
    let n = m.n();
    let cost = |i: usize, j: usize| -m.get(i - 1, j - 1);
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut proof_of = vec![0; n];
    for j in 1..=n {
        proof_of[row_of[j] - 1] = j - 1;
    }
    let a = Assignment { proof_of };
    let total = a.objective(m);
    (a, total)
}
