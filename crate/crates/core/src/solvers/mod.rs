//! QAP solvers over an [`AffinityMatrix`] and the end-to-end matching pipeline.

mod astar;
mod brute;
pub mod hungarian;
mod pipeline;
mod rrwm;
mod spectral;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affinity::AffinityError;

pub use astar::{astar_heuristic, solve_astar, solve_astar_matrix};
pub use brute::{brute_force, MAX_BRUTE_FORCE_ASSIGNMENTS};
pub use hungarian::hungarian_round;
pub use pipeline::{match_graphs, MatchOutcome, MatchReport, Timings};
pub use rrwm::{sinkhorn_rect, solve_rrwm};
pub use spectral::solve_spectral;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("degenerate affinity")]
    DegenerateAffinity,
    #[error("search budget exhausted after {0:.1} s")]
    BudgetExhausted(f64),
    #[error("instance too large for exhaustive search: {0} assignments")]
    TooLarge(f64),
    #[error("graph 1 has {0} nodes but graph 2 only {1}")]
    SizeOrder(usize, usize),
    #[error("solver {0:?} is unsupported")]
    Unsupported(String),
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Affinity(#[from] AffinityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Spectral,
    Rrwm,
    Astar,
    BruteForce,
    /// Learned matcher; reserved, always reports unsupported.
    Neural,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Spectral => "spectral",
            Solver::Rrwm => "rrwm",
            Solver::Astar => "astar",
            Solver::BruteForce => "brute_force",
            Solver::Neural => "neural",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Solver::Spectral => "Spectral",
            Solver::Rrwm => "RRWM",
            Solver::Astar => "A*",
            Solver::BruteForce => "Brute",
            Solver::Neural => "Neural",
        }
    }
}

impl std::fmt::Display for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Solver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spectral" | "sm" => Ok(Solver::Spectral),
            "rrwm" => Ok(Solver::Rrwm),
            "astar" | "a*" => Ok(Solver::Astar),
            "brute_force" | "brute" => Ok(Solver::BruteForce),
            "neural" => Ok(Solver::Neural),
            other => Err(format!("unknown solver {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub max_iters: usize,
    pub tol: f64,
    /// Weight of the random-walk term in RRWM; the jump gets `1 - alpha`.
    pub rrwm_alpha: f64,
    pub rrwm_beta: f64,
    /// 0 keeps every child (exact search).
    pub astar_beam: usize,
    pub seed: u64,
    /// Wall-clock budget for a single solve, seconds.
    pub timeout_s: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            max_iters: 300,
            tol: 1e-8,
            rrwm_alpha: 0.2,
            rrwm_beta: 30.0,
            astar_beam: 0,
            seed: 0,
            timeout_s: 300.0,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidParams(m.to_string()));
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if !(self.rrwm_alpha > 0.0 && self.rrwm_alpha < 1.0) {
            return bad("rrwm_alpha must lie in (0, 1)");
        }
        if !(self.rrwm_beta > 0.0 && self.rrwm_beta.is_finite()) {
            return bad("rrwm_beta must be positive");
        }
        if !(self.timeout_s > 0.0) {
            return bad("timeout_s must be positive");
        }
        Ok(())
    }
}

/// Relaxed assignment scores, row-major `n1 x n2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMatch {
    pub n1: usize,
    pub n2: usize,
    pub scores: Vec<f64>,
}

impl SoftMatch {
    pub fn new(n1: usize, n2: usize, scores: Vec<f64>) -> Result<Self, SolverError> {
        if scores.len() != n1 * n2 || n1 == 0 {
            return Err(SolverError::InvalidParams(format!("{} scores for {n1}x{n2}", scores.len())));
        }
        if scores.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(SolverError::InvalidParams("scores must be finite and non-negative".into()));
        }
        if scores.iter().all(|v| *v == 0.0) {
            return Err(SolverError::DegenerateAffinity);
        }
        Ok(SoftMatch { n1, n2, scores })
    }

    /// Reshapes a vector over `K`'s index `i + a * n1`.
    pub(crate) fn from_k_vector(n1: usize, n2: usize, v: &[f64]) -> Result<Self, SolverError> {
        let mut scores = vec![0.0; n1 * n2];
        for a in 0..n2 {
            for i in 0..n1 {
                scores[i * n2 + a] = v[i + a * n1].abs();
            }
        }
        SoftMatch::new(n1, n2, scores)
    }

    pub fn get(&self, i: usize, a: usize) -> f64 {
        self.scores[i * self.n2 + a]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.scores[i * self.n2..(i + 1) * self.n2]
    }
}

/// Final assignment: row `i` of `K` goes to column `assignment[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HardMatch {
    pub assignment: Vec<usize>,
    pub objective: f64,
}

impl HardMatch {
    /// Total on rows, in range, and injective into columns.
    pub fn is_valid(&self, n1: usize, n2: usize) -> bool {
        if self.assignment.len() != n1 {
            return false;
        }
        let mut seen = vec![false; n2];
        for &a in &self.assignment {
            if a >= n2 || seen[a] {
                return false;
            }
            seen[a] = true;
        }
        true
    }
}

/// Rounds a soft match and scores it against `K`.
pub fn round_against(k: &crate::affinity::AffinityMatrix, s: &SoftMatch) -> HardMatch {
    let mut h = hungarian_round(s);
    h.objective = k.objective(&h.assignment);
    h
}
