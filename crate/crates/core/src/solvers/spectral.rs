use super::{SoftMatch, SolverError, SolverParams};
use crate::affinity::AffinityMatrix;

/// Spectral matching: leading eigenvector of `K` by power iteration from the
/// uniform vector, reshaped to `n1 x n2`.
pub fn solve_spectral(k: &AffinityMatrix, p: &SolverParams) -> Result<SoftMatch, SolverError> {
    p.validate()?;
    if k.is_zero() {
        return Err(SolverError::DegenerateAffinity);
    }
    let n = k.size();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut next = vec![0.0; n];
    for _ in 0..p.max_iters {
        k.matvec(&v, &mut next);
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(SolverError::DegenerateAffinity);
        }
        let mut delta: f64 = 0.0;
        for (x, y) in next.iter_mut().zip(&v) {
            *x /= norm;
            delta = delta.max((*x - y).abs());
        }
        std::mem::swap(&mut v, &mut next);
        if delta < p.tol {
            break;
        }
    }
    SoftMatch::from_k_vector(k.n1(), k.n2(), &v)
}
