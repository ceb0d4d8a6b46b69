use crate::assignment::{solve_dense, Assignment, ScoreMatrix};
use crate::encoders::tensor::softmax_rows;
use crate::encoders::Matrix;

use super::TrainError;

/// In-batch softmax loss with gold pairs on the diagonal:
/// Σ_i [−m_ii + logsumexp_j m_ij]. Returns the loss and dLoss/dM.
pub fn local_loss(m: &Matrix) -> Result<(f64, Matrix), TrainError> {
    let b = m.rows();
    if b < 2 || m.cols() != b {
        return Err(TrainError::DegenerateBatch(b));
    }
    let mut loss = 0.0;
    for i in 0..b {
        let row = m.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        loss += lse - row[i];
    }
    let mut grad = m.clone();
    softmax_rows(&mut grad);
    for i in 0..b {
        let v = grad.get(i, i);
        grad.set(i, i, v - 1.0);
    }
    Ok((loss, grad))
}

/// Number of rows not assigned their own column, i.e. Σ_ij max(0, (Â − I)_ij).
pub fn structured_cost(a_hat: &Assignment) -> usize {
    a_hat.misplaced()
}

/// Structured hinge max(0, Δ(Â, I) + score(Â) − score(I)) where Â is the
/// cost-augmented argmax (the LAP on m_ij + [i ≠ j]). Returns the loss, its
/// subgradient with respect to M and Â.
pub fn global_loss(m: &Matrix) -> Result<(f64, Matrix, Assignment), TrainError> {
    let b = m.rows();
    if b == 0 || m.cols() != b {
        return Err(TrainError::DegenerateBatch(b));
    }
    let mut augmented = m.data().to_vec();
    for i in 0..b {
        for j in 0..b {
            if i != j {
                augmented[i * b + j] += 1.0;
            }
        }
    }
    let aug = ScoreMatrix::new(b, augmented)?;
    let (a_hat, _) = solve_dense(&aug);
    let score_hat: f64 = a_hat.proof_of.iter().enumerate().map(|(i, &j)| m.get(i, j)).sum();
    let score_gold: f64 = (0..b).map(|i| m.get(i, i)).sum();
    let raw = structured_cost(&a_hat) as f64 + score_hat - score_gold;
    let loss = raw.max(0.0);
    let mut grad = Matrix::zeros(b, b);
    if loss > 0.0 {
        for (i, &j) in a_hat.proof_of.iter().enumerate() {
            let v = grad.get(i, j);
            grad.set(i, j, v + 1.0);
            let d = grad.get(i, i);
            grad.set(i, i, d - 1.0);
        }
    }
    Ok((loss, grad, a_hat))
}
