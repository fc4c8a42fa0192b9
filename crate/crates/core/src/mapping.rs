//! Local map building from a time-ordered observation stream.
//!
//! Each observation is either associated to an existing landmark or starts a
//! new one. A landmark is a candidate only if it passes three gates:
//! embedding cosine similarity, positional Mahalanobis distance, and recency
//! (skipped when global closures are allowed). Among candidates the one
//! with the largest `position likelihood × cosine` wins.
//!
//! Poses are taken as given. Positions and embeddings of matched landmarks
//! are refined by independent diagonal Kalman updates.

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affinity::cosine_similarity;
use crate::graph::{GraphError, NodeId, ObjectGraph, ObjectNode};
use crate::uncertainty::{kalman_init, kalman_update, scalar_to_variance, LandmarkBelief, UncertaintyError};
use crate::SCHEMA;

/// sqrt of the 95% chi-square quantile with 3 degrees of freedom (7.8147).
pub const MAHALANOBIS_GATE_95_3DOF: f64 = 2.795_483_5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapBuildError {
    #[error("observation at t = {t} precedes previous t = {last}")]
    OutOfOrder { t: f64, last: f64 },
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error("embedding dimension {got} does not match map dimension {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("empty map")]
    EmptyMap,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Uncertainty(#[from] UncertaintyError),
}

/// One timestamped object detection in the odometry frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t: f64,
    pub position_world: [f64; 3],
    /// Diagonal position covariance, m².
    pub position_var: [f64; 3],
    pub embedding: Vec<f64>,
    pub image_uncertainty: f64,
}

impl Observation {
    pub fn validate(&self) -> Result<(), MapBuildError> {
        let bad = |m: &str| Err(MapBuildError::InvalidObservation(m.to_string()));
        if !self.t.is_finite() {
            return bad("non-finite timestamp");
        }
        if self.position_world.iter().any(|v| !v.is_finite()) {
            return bad("non-finite position");
        }
        if self.position_var.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("position variance must be positive");
        }
        if self.embedding.is_empty() || self.embedding.iter().any(|v| !v.is_finite()) {
            return bad("embedding must be non-empty and finite");
        }
        if self.embedding.iter().all(|v| *v == 0.0) {
            return bad("zero embedding");
        }
        if !(self.image_uncertainty.is_finite() && self.image_uncertainty >= 0.0) {
            return bad("uncertainty must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssociationGates {
    pub cos_min: f64,
    /// Maximum positional Mahalanobis distance (not squared).
    pub maha_max: f64,
    pub temporal_window_s: f64,
    pub allow_global_closure: bool,
}

impl Default for AssociationGates {
    fn default() -> Self {
        AssociationGates {
            cos_min: 0.85,
            maha_max: MAHALANOBIS_GATE_95_3DOF,
            temporal_window_s: 60.0,
            allow_global_closure: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Association {
    Existing(NodeId),
    New,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Landmark {
    /// Mirrors `belief` and `position`.
    pub node: ObjectNode,
    pub belief: LandmarkBelief,
    pub position: LandmarkBelief,
}

impl Landmark {
    pub fn position_var(&self) -> [f64; 3] {
        [self.position.var[0], self.position.var[1], self.position.var[2]]
    }

    fn sync_node(&mut self) {
        self.node.position = [self.position.mean[0], self.position.mean[1], self.position.mean[2]];
        self.node.embedding_mean.clone_from(&self.belief.mean);
        self.node.embedding_var.clone_from(&self.belief.var);
        self.node.scalar_uncertainty = self.belief.scalar_uncertainty();
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalMap {
    pub landmarks: Vec<Landmark>,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
}

/// Positional Mahalanobis distance and Gaussian likelihood of `obs` under `lm`.
fn position_fit(obs: &Observation, lm: &Landmark) -> (f64, f64) {
    let mut d2 = 0.0;
    let mut det = 1.0;
    for k in 0..3 {
        let s = lm.position.var[k] + obs.position_var[k];
        let r = obs.position_world[k] - lm.position.mean[k];
        d2 += r * r / s;
        det *= s;
    }
    let norm = ((2.0 * std::f64::consts::PI).powi(3) * det).sqrt();
    (d2.sqrt(), (-0.5 * d2).exp() / norm)
}

/// Picks the landmark `obs` belongs to, or [`Association::New`].
pub fn associate(obs: &Observation, map: &LocalMap, gates: &AssociationGates) -> Association {
    let mut best: Option<(f64, NodeId)> = None;
    for lm in &map.landmarks {
        if !gates.allow_global_closure && obs.t - lm.node.last_seen > gates.temporal_window_s {
            continue;
        }
        let Some(cos) = cosine_similarity(&obs.embedding, &lm.belief.mean) else {
            continue;
        };
        if cos < gates.cos_min {
            continue;
        }
        let (maha, likelihood) = position_fit(obs, lm);
        if maha > gates.maha_max {
            continue;
        }
        let score = likelihood * cos;
        // strict comparison keeps the lowest id on ties
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, lm.node.id));
        }
    }
    match best {
        Some((_, id)) => Association::Existing(id),
        None => Association::New,
    }
}

impl LocalMap {
    pub fn new() -> Self {
        LocalMap::default()
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.landmarks.first().map(|l| l.belief.dim())
    }

    /// Adds one observation; returns the landmark id it was assigned to.
    pub fn ingest(&mut self, obs: &Observation, gates: &AssociationGates) -> Result<NodeId, MapBuildError> {
        obs.validate()?;
        if let Some(last) = self.t_end {
            if obs.t < last {
                return Err(MapBuildError::OutOfOrder { t: obs.t, last });
            }
        }
        if let Some(dim) = self.dim() {
            if obs.embedding.len() != dim {
                return Err(MapBuildError::DimMismatch { expected: dim, got: obs.embedding.len() });
            }
        }
        let r_emb = scalar_to_variance(obs.image_uncertainty, obs.embedding.len());
        let id = match associate(obs, self, gates) {
            Association::New => {
                let id = self.landmarks.len() as NodeId;
                let belief = kalman_init(&obs.embedding, &r_emb)?;
                let position = kalman_init(&obs.position_world, &obs.position_var)?;
                let node = ObjectNode {
                    id,
                    position: obs.position_world,
                    embedding_mean: belief.mean.clone(),
                    embedding_var: belief.var.clone(),
                    scalar_uncertainty: belief.scalar_uncertainty(),
                    obs_count: 1,
                    last_seen: obs.t,
                };
                self.landmarks.push(Landmark { node, belief, position });
                id
            }
            Association::Existing(id) => {
                let lm = &mut self.landmarks[id as usize];
                lm.belief = kalman_update(&lm.belief, &obs.embedding, &r_emb)?;
                lm.position = kalman_update(&lm.position, &obs.position_world, &obs.position_var)?;
                lm.node.obs_count += 1;
                lm.node.last_seen = obs.t;
                lm.sync_node();
                id
            }
        };
        self.t_start.get_or_insert(obs.t);
        self.t_end = Some(obs.t);
        Ok(id)
    }

    pub fn finalize(&self, frame_id: &str, edge_threshold: f64) -> Result<ObjectGraph, MapBuildError> {
        if self.landmarks.is_empty() {
            return Err(MapBuildError::EmptyMap);
        }
        let nodes = self.landmarks.iter().map(|l| l.node.clone()).collect();
        Ok(ObjectGraph::new(frame_id, nodes, edge_threshold)?)
    }
}

/// First line of an observation stream file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamHeader {
    #[serde(default = "schema")]
    pub schema: String,
    pub dim: usize,
}

fn schema() -> String {
    SCHEMA.to_string()
}

/// Parses a JSON-lines stream: a header line declaring `dim`, then one
/// observation per line. Blank lines are skipped.
pub fn read_observation_stream(reader: impl BufRead) -> Result<(StreamHeader, Vec<Observation>), MapBuildError> {
    let mut header: Option<StreamHeader> = None;
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line.map_err(|e| MapBuildError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| MapBuildError::Malformed { line: line_no, message };
        match &header {
            None => {
                let h: StreamHeader = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
                if h.schema != SCHEMA {
                    return Err(malformed(format!("unsupported schema {:?}", h.schema)));
                }
                header = Some(h);
            }
            Some(h) => {
                let obs: Observation = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
                if obs.embedding.len() != h.dim {
                    return Err(malformed(format!(
                        "embedding has dimension {}, header declares {}",
                        obs.embedding.len(),
                        h.dim
                    )));
                }
                obs.validate().map_err(|e| malformed(e.to_string()))?;
                out.push(obs);
            }
        }
    }
    let header = header.ok_or(MapBuildError::Malformed { line: 1, message: "missing header".into() })?;
    Ok((header, out))
}

pub fn write_observation_stream(
    mut w: impl std::io::Write,
    dim: usize,
    observations: &[Observation],
) -> std::io::Result<()> {
    let header = StreamHeader { schema: SCHEMA.to_string(), dim };
    writeln!(w, "{}", serde_json::to_string(&header)?)?;
    for o in observations {
        writeln!(w, "{}", serde_json::to_string(o)?)?;
    }
    Ok(())
}
