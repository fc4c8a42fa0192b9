//! Accuracy and timing sweeps over synthetic scenes.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affinity::{AffinityConfig, NodeMetric};
use crate::scenario::{generate_scene, sample_query, ScenarioError, ScenarioSpec};
use crate::solvers::{match_graphs, SolverError, SolverParams, Solver, Timings};
use crate::SCHEMA;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("trial {trial}, size {size}, {solver}: {source}")]
    Solver {
        trial: usize,
        size: usize,
        solver: String,
        source: SolverError,
    },
    #[error("bench needs at least one solver and one affinity")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub spec: ScenarioSpec,
    pub solvers: Vec<Solver>,
    pub metrics: Vec<NodeMetric>,
    pub affinity: AffinityConfig,
    pub params: SolverParams,
}

impl BenchPlan {
    pub fn new(spec: ScenarioSpec) -> Self {
        BenchPlan {
            spec,
            solvers: vec![Solver::Astar, Solver::Rrwm, Solver::Spectral],
            metrics: NodeMetric::ALL.to_vec(),
            affinity: AffinityConfig::default(),
            params: SolverParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub size: usize,
    /// Mean accuracy over trials; `None` when any trial ran out of budget.
    pub accuracy: Option<f64>,
    pub timed_out: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_timings_s: Option<Timings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub solver: Solver,
    pub affinity: NodeMetric,
    pub cells: Vec<BenchCell>,
    /// Mean of the row's accuracies; `None` when any cell is `None`.
    pub average: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema: String,
    pub scenario: ScenarioSpec,
    pub sizes: Vec<usize>,
    pub rows: Vec<BenchRow>,
}

#[derive(Clone, Copy)]
enum Outcome {
    Done(f64, Timings),
    TimedOut,
}

fn run_trial(plan: &BenchPlan, trial: usize) -> Result<Vec<Outcome>, BenchError> {
    let spec = &plan.spec;
    let mut rng = spec.trial_rng(trial);
    let scene = generate_scene(spec, &mut rng)?;
    let mut out = Vec::with_capacity(spec.subgraph_sizes.len() * plan.solvers.len() * plan.metrics.len());
    for &size in &spec.subgraph_sizes {
        let query = sample_query(spec, &scene, size, &mut rng)?;
        for &solver in &plan.solvers {
            for &metric in &plan.metrics {
                let cfg = AffinityConfig { node_metric: metric, ..plan.affinity };
                match match_graphs(&query.graph, &scene.map, &cfg, solver, &plan.params) {
                    Ok(m) => out.push(Outcome::Done(m.accuracy(&query.truth), m.timings)),
                    Err(SolverError::BudgetExhausted(_)) => out.push(Outcome::TimedOut),
                    Err(source) => {
                        return Err(BenchError::Solver { trial, size, solver: solver.name().to_string(), source })
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Runs every trial in parallel. Results are reduced in trial order, so the
/// accuracies do not depend on scheduling.
pub fn run_bench(plan: &BenchPlan, with_timings: bool) -> Result<BenchReport, BenchError> {
    if plan.solvers.is_empty() || plan.metrics.is_empty() {
        return Err(BenchError::Empty);
    }
    plan.spec.validate()?;
    let per_trial: Vec<Vec<Outcome>> =
        (0..plan.spec.trials).into_par_iter().map(|t| run_trial(plan, t)).collect::<Result<_, _>>()?;

    let sizes = plan.spec.subgraph_sizes.clone();
    let (ns, nm) = (plan.solvers.len(), plan.metrics.len());
    let mut rows = Vec::with_capacity(ns * nm);
    for (si, &solver) in plan.solvers.iter().enumerate() {
        for (mi, &metric) in plan.metrics.iter().enumerate() {
            let mut cells = Vec::with_capacity(sizes.len());
            for (zi, &size) in sizes.iter().enumerate() {
                let slot = zi * ns * nm + si * nm + mi;
                let mut acc = 0.0;
                let mut timings = Timings::default();
                let mut timed_out = 0;
                for trial in &per_trial {
                    match trial[slot] {
                        Outcome::Done(a, t) => {
                            acc += a;
                            timings.adjacency += t.adjacency;
                            timings.affinity += t.affinity;
                            timings.solve += t.solve;
                        }
                        Outcome::TimedOut => timed_out += 1,
                    }
                }
                let done = (per_trial.len() - timed_out) as f64;
                let mean_timings_s = (with_timings && done > 0.0).then(|| Timings {
                    adjacency: timings.adjacency / done,
                    affinity: timings.affinity / done,
                    solve: timings.solve / done,
                });
                cells.push(BenchCell {
                    size,
                    accuracy: (timed_out == 0).then(|| acc / per_trial.len() as f64),
                    timed_out,
                    mean_timings_s,
                });
            }
            let accs: Option<Vec<f64>> = cells.iter().map(|c| c.accuracy).collect();
            let average = accs.filter(|a| !a.is_empty()).map(|a| a.iter().sum::<f64>() / a.len() as f64);
            rows.push(BenchRow { solver, affinity: metric, cells, average });
        }
    }
    Ok(BenchReport { schema: SCHEMA.to_string(), scenario: plan.spec.clone(), sizes, rows })
}

impl BenchReport {
    pub fn row(&self, solver: Solver, metric: NodeMetric) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.solver == solver && r.affinity == metric)
    }

    /// Mean accuracy at `size` over every row that finished it.
    pub fn column_mean(&self, size: usize) -> Option<f64> {
        let zi = self.sizes.iter().position(|&s| s == size)?;
        let vals: Vec<f64> = self.rows.iter().filter_map(|r| r.cells[zi].accuracy).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    /// Plain-text table: one row per solver and affinity, one column per
    /// subgraph size, then the row average. Timed-out cells print `--`.
    pub fn table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "--".to_string(), |a| format!("{a:.2}"));
        let mut s = String::new();
        let _ = write!(s, "{:<10}{:<10}", "Solver", "Affinity");
        for size in &self.sizes {
            let _ = write!(s, "{size:>7}");
        }
        let _ = writeln!(s, "{:>7}", "Avg.");
        let mut last = None;
        for r in &self.rows {
            let name = if last == Some(r.solver) { "" } else { r.solver.label() };
            last = Some(r.solver);
            let _ = write!(s, "{:<10}{:<10}", name, r.affinity.short_label());
            for c in &r.cells {
                let _ = write!(s, "{:>7}", fmt(c.accuracy));
            }
            let _ = writeln!(s, "{:>7}", fmt(r.average));
        }
        s
    }
}
