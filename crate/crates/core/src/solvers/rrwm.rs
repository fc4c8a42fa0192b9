//! Reweighted random walk matching.
//!
//! Each step takes a random-walk move on `K` (normalized by its largest row
//! sum) and mixes it with a reweighted jump: an exponential sharpening of the
//! walked vector pushed toward the assignment constraints by Sinkhorn
//! scaling on the `n1 x n2` reshaping.

use super::{SoftMatch, SolverError, SolverParams};
use crate::affinity::AffinityMatrix;

const SINKHORN_ITERS: usize = 200;
const SINKHORN_TOL: f64 = 1e-9;

/// Scales a positive row-major `n1 x n2` matrix (`n1 ≤ n2`) so every row sums
/// to 1 and no column sums to more than 1. Always finishes on a row pass.
pub fn sinkhorn_rect(m: &mut [f64], n1: usize, n2: usize) {
    debug_assert_eq!(m.len(), n1 * n2);
    let mut col = vec![0.0; n2];
    for _ in 0..SINKHORN_ITERS {
        normalize_rows(m, n1, n2);
        col.iter_mut().for_each(|c| *c = 0.0);
        for i in 0..n1 {
            for (c, x) in col.iter_mut().zip(&m[i * n2..(i + 1) * n2]) {
                *c += x;
            }
        }
        let worst = col.iter().fold(0.0f64, |acc, &c| acc.max(c));
        if worst <= 1.0 + SINKHORN_TOL {
            return;
        }
        for i in 0..n1 {
            for (x, &c) in m[i * n2..(i + 1) * n2].iter_mut().zip(&col) {
                if c > 1.0 {
                    *x /= c;
                }
            }
        }
    }
    normalize_rows(m, n1, n2);
}

fn normalize_rows(m: &mut [f64], n1: usize, n2: usize) {
    for i in 0..n1 {
        let row = &mut m[i * n2..(i + 1) * n2];
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|x| *x /= s);
        }
    }
}

/// Jump distribution for a walked vector `x` over `K`'s index `i + a * n1`;
/// returned row-major `n1 x n2` with rows summing to 1.
pub(crate) fn reweighted_jump(x: &[f64], n1: usize, n2: usize, beta: f64) -> Vec<f64> {
    let max = x.iter().fold(0.0f64, |acc, &v| acc.max(v));
    let mut m = vec![0.0; n1 * n2];
    for a in 0..n2 {
        for i in 0..n1 {
            let rel = if max > 0.0 { x[i + a * n1] / max } else { 1.0 };
            // shifted by -beta; constant factors cancel under normalization
            m[i * n2 + a] = (beta * (rel - 1.0)).exp();
        }
    }
    sinkhorn_rect(&mut m, n1, n2);
    m
}

pub fn solve_rrwm(k: &AffinityMatrix, p: &SolverParams) -> Result<SoftMatch, SolverError> {
    p.validate()?;
    let dmax = k.max_row_sum();
    if !(dmax > 0.0) {
        return Err(SolverError::DegenerateAffinity);
    }
    let (n1, n2, n) = (k.n1(), k.n2(), k.size());
    let mut x = vec![1.0 / n as f64; n];
    let mut walked = vec![0.0; n];
    for _ in 0..p.max_iters {
        k.matvec(&x, &mut walked);
        walked.iter_mut().for_each(|w| *w /= dmax);
        let jump = reweighted_jump(&walked, n1, n2, p.rrwm_beta);
        let jump_total: f64 = jump.iter().sum();
        let mut next = vec![0.0; n];
        for a in 0..n2 {
            for i in 0..n1 {
                let q = i + a * n1;
                next[q] = p.rrwm_alpha * walked[q] + (1.0 - p.rrwm_alpha) * jump[i * n2 + a] / jump_total;
            }
        }
        let total: f64 = next.iter().sum();
        if !(total > 0.0) {
            return Err(SolverError::DegenerateAffinity);
        }
        next.iter_mut().for_each(|v| *v /= total);
        let delta = next.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        x = next;
        if delta < p.tol {
            break;
        }
    }
    SoftMatch::from_k_vector(n1, n2, &x)
}
