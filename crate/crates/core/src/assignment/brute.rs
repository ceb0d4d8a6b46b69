use super::{Assignment, AssignmentError, ScoreMatrix};

pub const BRUTE_MAX_N: usize = 9;

/// Exhaustive search over all n! permutations in lexicographic order.
/// Only a strictly better total replaces the incumbent, so ties resolve to
/// the lexicographically smallest permutation.
pub fn solve_brute(m: &ScoreMatrix) -> Result<(Assignment, f64), AssignmentError> {
    let n = m.n();
    if n > BRUTE_MAX_N {
        return Err(AssignmentError::TooLarge { n, max: BRUTE_MAX_N });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let total = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| m.get(i, j)).sum::<f64>();
    let mut best = perm.clone();
    let mut best_score = total(&perm);
    while next_permutation(&mut perm) {
        let s = total(&perm);
        if s > best_score {
            best_score = s;
            best.copy_from_slice(&perm);
        }
    }
    Ok((Assignment { proof_of: best }, best_score))
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let m = ScoreMatrix::from_rows(&[vec![10.0, 0.0], vec![0.0, 10.0]]).unwrap();
        assert_eq!(solve_brute(&m).unwrap(), (Assignment { proof_of: vec![0, 1] }, 20.0));
        let m = ScoreMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(solve_brute(&m).unwrap(), (Assignment { proof_of: vec![1, 0] }, 4.0));
    }

    #[test]
    fn ties_pick_smallest_permutation() {
        let m = ScoreMatrix::new(3, vec![1.0; 9]).unwrap();
        assert_eq!(solve_brute(&m).unwrap().0.proof_of, vec![0, 1, 2]);
    }

    #[test]
    fn enumerates_all_permutations() {
        let mut p = vec![0, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 24);
    }

    #[test]
    fn too_large_and_empty() {
        let m = ScoreMatrix::new(10, vec![0.0; 100]).unwrap();
        assert_eq!(solve_brute(&m), Err(AssignmentError::TooLarge { n: 10, max: 9 }));
        let m = ScoreMatrix::new(0, vec![]).unwrap();
        assert_eq!(solve_brute(&m).unwrap().0.proof_of, Vec::<usize>::new());
    }
}
