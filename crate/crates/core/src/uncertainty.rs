//! Semantic uncertainty: the pairwise ranking loss used to train uncertainty
//! heads, and per-landmark Kalman tracking of embedding distributions.
//!
//! Landmarks are static and every covariance is diagonal, so the Kalman
//! update decouples into D independent scalar filters. Inverting the
//! innovation covariance is an element-wise reciprocal.

use thiserror::Error;

/// Floor added to squared scalar uncertainties so beliefs never start singular.
pub const VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UncertaintyError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("variance entry {index} must be positive, got {value}")]
    NonPositiveVariance { index: usize, value: f64 },
    #[error("measurement noise entry {index} must be non-negative, got {value}")]
    NegativeNoise { index: usize, value: f64 },
    #[error("degenerate innovation at coordinate {0}")]
    DegenerateInnovation(usize),
    #[error("non-finite input")]
    NonFinite,
    #[error("margin must be positive, got {0}")]
    InvalidMargin(f64),
}

/// One training pair for the uncertainty ranking loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintySample {
    pub u1: f64,
    pub u2: f64,
    pub task_loss1: f64,
    pub task_loss2: f64,
    pub margin: f64,
}

/// Hinge ranking loss `max(0, s * (u1 - u2 + margin))` where `s = +1` when
/// input 1 has the larger task loss and `-1` otherwise.
pub fn ranking_loss(s: &UncertaintySample) -> Result<f64, UncertaintyError> {
    ranking_loss_with_sign(s, false)
}

/// As [`ranking_loss`]; `flip_sign` negates the indicator.
pub fn ranking_loss_with_sign(s: &UncertaintySample, flip_sign: bool) -> Result<f64, UncertaintyError> {
    if !(s.margin > 0.0) || !s.margin.is_finite() {
        return Err(UncertaintyError::InvalidMargin(s.margin));
    }
    if ![s.u1, s.u2, s.task_loss1, s.task_loss2].iter().all(|v| v.is_finite()) {
        return Err(UncertaintyError::NonFinite);
    }
    let mut indicator = if s.task_loss1 > s.task_loss2 { 1.0 } else { -1.0 };
    if flip_sign {
        indicator = -indicator;
    }
    Ok((indicator * (s.u1 - s.u2 + s.margin)).max(0.0))
}

/// Isotropic diagonal variance `u² + 1e-6` for an image-level uncertainty score.
pub fn scalar_to_variance(u: f64, dim: usize) -> Vec<f64> {
    vec![u * u + VARIANCE_FLOOR; dim]
}

/// Gaussian belief over a landmark's embedding with diagonal covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkBelief {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub n_updates: u32,
}

impl LandmarkBelief {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Square root of the mean posterior variance.
    pub fn scalar_uncertainty(&self) -> f64 {
        (self.var.iter().sum::<f64>() / self.var.len() as f64).sqrt()
    }
}

/// Prior belief taken directly from a landmark's first observation.
pub fn kalman_init(embedding: &[f64], var: &[f64]) -> Result<LandmarkBelief, UncertaintyError> {
    if embedding.len() != var.len() {
        return Err(UncertaintyError::DimMismatch(embedding.len(), var.len()));
    }
    if embedding.iter().any(|v| !v.is_finite()) {
        return Err(UncertaintyError::NonFinite);
    }
    if let Some((index, &value)) = var.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
        return Err(UncertaintyError::NonPositiveVariance { index, value });
    }
    Ok(LandmarkBelief { mean: embedding.to_vec(), var: var.to_vec(), n_updates: 1 })
}

/// Fuses measurement `y` with noise variance `r` into `b`.
///
/// Per coordinate: `S = P + R`, `K = P / S`, `mean += K (y - mean)` and
/// `P' = P - K S K`, evaluated as `P * (R / S)` which is the same quantity
/// but stays within `[0, P]` under rounding.
pub fn kalman_update(b: &LandmarkBelief, y: &[f64], r: &[f64]) -> Result<LandmarkBelief, UncertaintyError> {
    let dim = b.dim();
    if y.len() != dim {
        return Err(UncertaintyError::DimMismatch(dim, y.len()));
    }
    if r.len() != dim {
        return Err(UncertaintyError::DimMismatch(dim, r.len()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(UncertaintyError::NonFinite);
    }
    let mut mean = Vec::with_capacity(dim);
    let mut var = Vec::with_capacity(dim);
    for d in 0..dim {
        let (p, rd) = (b.var[d], r[d]);
        if !(rd >= 0.0) || !rd.is_finite() {
            return Err(UncertaintyError::NegativeNoise { index: d, value: rd });
        }
        let s = p + rd;
        if s == 0.0 {
            return Err(UncertaintyError::DegenerateInnovation(d));
        }
        let gain = p / s;
        mean.push(b.mean[d] + gain * (y[d] - b.mean[d]));
        var.push(p * (rd / s));
    }
    Ok(LandmarkBelief { mean, var, n_updates: b.n_updates + 1 })
}
