//! JSON run configuration shared by every subcommand.
//!
//! ```json
//! {
//!   "gates":    { "cos_min": 0.85, "maha_max": 2.7955, ... },
//!   "affinity": { "node_metric": "weighted_cosine", "edge_sigma": 0.5, ... },
//!   "solver":   { "name": "astar", "timeout_s": 300.0, ... },
//!   "scenario": { "n_objects": 20, ... }
//! }
//! ```
//!
//! Every section and key is optional; missing keys take their defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affinity::AffinityConfig;
use crate::mapping::AssociationGates;
use crate::scenario::ScenarioSpec;
use crate::solvers::{Solver, SolverParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid config {path}: {message}")]
    Parse { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSection {
    pub name: Solver,
    #[serde(flatten)]
    pub params: SolverParams,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { name: Solver::Astar, params: SolverParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub gates: AssociationGates,
    pub affinity: AffinityConfig,
    pub solver: SolverSection,
    pub scenario: ScenarioSpec,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: shown.clone(), message: e.to_string() })?;
        Self::from_json(&text).map_err(|e| ConfigError::Parse { path: shown, message: e.to_string() })
    }
}
