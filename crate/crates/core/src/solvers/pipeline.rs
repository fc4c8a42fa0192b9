use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    brute_force, round_against, solve_astar_matrix, solve_rrwm, solve_spectral, HardMatch, Solver, SolverError,
    SolverParams,
};
use crate::affinity::{AffinityConfig, AffinityMatrix, NodeMetric};
use crate::graph::{NodeId, ObjectGraph};
use crate::SCHEMA;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub adjacency: f64,
    pub affinity: f64,
    pub solve: f64,
}

impl Timings {
    pub fn total(&self) -> f64 {
        self.adjacency + self.affinity + self.solve
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    /// `(g1 id, g2 id)` pairs, sorted by the first id.
    pub pairs: Vec<(NodeId, NodeId)>,
    /// Node affinity (diagonal of `K`) of each pair in `pairs`.
    pub node_affinities: Vec<f64>,
    pub objective: f64,
    /// Assignment over `K`'s rows; rows index `g2` when `swapped`.
    pub hard: HardMatch,
    pub swapped: bool,
    pub timings: Timings,
    pub solver: Solver,
    pub metric: NodeMetric,
}

impl MatchOutcome {
    /// Fraction of pairs that agree with `truth`, a map from g1 ids to g2 ids.
    pub fn accuracy(&self, truth: &std::collections::BTreeMap<NodeId, NodeId>) -> f64 {
        if self.pairs.is_empty() {
            return 0.0;
        }
        let hits = self.pairs.iter().filter(|(i, a)| truth.get(i) == Some(a)).count();
        hits as f64 / self.pairs.len() as f64
    }

    /// Report without wall-clock timings, so identical inputs give identical bytes.
    pub fn report(&self) -> MatchReport {
        MatchReport {
            schema: SCHEMA.to_string(),
            assignment: self.pairs.iter().map(|&(i, a)| [i, a]).collect(),
            objective: self.objective,
            node_affinities: self.node_affinities.clone(),
            timings_s: None,
            solver: self.solver.name().to_string(),
            affinity: self.metric.name().to_string(),
        }
    }

    pub fn report_with_timings(&self) -> MatchReport {
        MatchReport { timings_s: Some(self.timings), ..self.report() }
    }
}

/// JSON diagnostics for one match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub schema: String,
    pub assignment: Vec<[NodeId; 2]>,
    pub objective: f64,
    #[serde(default)]
    pub node_affinities: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_s: Option<Timings>,
    pub solver: String,
    pub affinity: String,
}

/// Builds `K` for the two graphs, runs `solver`, and rounds soft results
/// with the Hungarian method.
pub fn match_graphs(
    g1: &ObjectGraph,
    g2: &ObjectGraph,
    cfg: &AffinityConfig,
    solver: Solver,
    params: &SolverParams,
) -> Result<MatchOutcome, SolverError> {
    if solver == Solver::Neural {
        return Err(SolverError::Unsupported(solver.name().to_string()));
    }
    params.validate()?;

    let t0 = Instant::now();
    let adj1 = g1.adjacency();
    let adj2 = g2.adjacency();
    let t1 = Instant::now();
    let k = AffinityMatrix::build_with_adjacency(g1, g2, &adj1, &adj2, cfg)?;
    let t2 = Instant::now();
    let hard = match solver {
        Solver::Spectral => round_against(&k, &solve_spectral(&k, params)?),
        Solver::Rrwm => round_against(&k, &solve_rrwm(&k, params)?),
        Solver::Astar => solve_astar_matrix(&k, params)?,
        Solver::BruteForce => brute_force(&k)?,
        Solver::Neural => unreachable!(),
    };
    let t3 = Instant::now();

    let swapped = k.swapped();
    let (rows_g, cols_g) = if swapped { (g2, g1) } else { (g1, g2) };
    let mut pairs: Vec<(NodeId, NodeId, f64)> = hard
        .assignment
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let (ri, ca) = (rows_g.nodes()[i].id, cols_g.nodes()[a].id);
            let aff = k.node_affinity(i, a);
            if swapped {
                (ca, ri, aff)
            } else {
                (ri, ca, aff)
            }
        })
        .collect();
    pairs.sort_by_key(|p| p.0);

    Ok(MatchOutcome {
        node_affinities: pairs.iter().map(|p| p.2).collect(),
        pairs: pairs.iter().map(|p| (p.0, p.1)).collect(),
        objective: hard.objective,
        hard,
        swapped,
        timings: Timings {
            adjacency: (t1 - t0).as_secs_f64(),
            affinity: (t2 - t1).as_secs_f64(),
            solve: (t3 - t2).as_secs_f64(),
        },
        solver,
        metric: cfg.node_metric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ObjectNode;

    fn square_graph(offset: u64) -> ObjectGraph {
        let pos = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.5, 0.0], [0.0, 1.2, 0.3]];
        let nodes = (0..4)
            .map(|k| {
                let mut e = vec![0.0; 4];
                e[k] = 1.0;
                ObjectNode::new(offset + k as u64, pos[k], e, 0.0)
            })
            .collect();
        ObjectGraph::new("sq", nodes, 2.0).unwrap()
    }

    #[test]
    fn identical_graphs_match_identically() {
        let g = square_graph(10);
        for solver in [Solver::Spectral, Solver::Rrwm, Solver::Astar, Solver::BruteForce] {
            let m = match_graphs(&g, &g, &AffinityConfig::default(), solver, &SolverParams::default()).unwrap();
            assert_eq!(m.pairs, vec![(10, 10), (11, 11), (12, 12), (13, 13)], "{solver:?}");
            assert!(m.hard.is_valid(4, 4));
        }
    }

    #[test]
    fn swapped_inputs_report_original_orientation() {
        let big = square_graph(0);
        let small = big.subgraph(&[1, 2]).unwrap();
        let m = match_graphs(&big, &small, &AffinityConfig::default(), Solver::Astar, &SolverParams::default())
            .unwrap();
        assert!(m.swapped);
        assert_eq!(m.pairs, vec![(1, 1), (2, 2)]);
    }

    #[test]
    fn neural_is_unsupported() {
        let g = square_graph(0);
        let err = match_graphs(&g, &g, &AffinityConfig::default(), Solver::Neural, &SolverParams::default());
        assert!(matches!(err, Err(SolverError::Unsupported(_))));
    }

    #[test]
    fn report_carries_schema_and_names() {
        let g = square_graph(0);
        let m = match_graphs(&g, &g, &AffinityConfig::default(), Solver::Rrwm, &SolverParams::default()).unwrap();
        let json = serde_json::to_value(m.report()).unwrap();
        assert_eq!(json["schema"], SCHEMA);
        assert_eq!(json["solver"], "rrwm");
        assert_eq!(json["affinity"], "weighted_cosine");
        assert_eq!(json["assignment"][2], serde_json::json!([2, 2]));
        assert!(json.get("timings_s").is_none());
        let json = serde_json::to_value(m.report_with_timings()).unwrap();
        assert!(json["timings_s"]["solve"].as_f64().unwrap() >= 0.0);
    }
}
