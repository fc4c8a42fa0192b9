use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use constellation::affinity::NodeMetric;
use constellation::bench::{run_bench, BenchError, BenchPlan};
use constellation::config::Config;
use constellation::graph::{MapFile, NodeId, ObjectGraph};
use constellation::mapping::{read_observation_stream, write_observation_stream, LocalMap};
use constellation::render::{graph_dot, match_dot, match_svg};
use constellation::scenario::{generate_scene, observation_stream, sample_query};
use constellation::solvers::{match_graphs, Solver, SolverError};
use constellation::SCHEMA;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Timeout(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Timeout(_) => 3,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::BudgetExhausted(_) => CliError::Timeout(e.to_string()),
            other => invalid(other),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        invalid(e)
    }
}

#[derive(Parser)]
#[command(name = "constellation-match", version, about = "Object-graph matching for place recognition")]
struct Cli {
    /// JSON config with optional sections gates, affinity, solver, scenario.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene, query subgraphs, ground truth and observation streams.
    Gen(GenArgs),
    /// Build an object map from an observation stream.
    BuildMap(BuildMapArgs),
    /// Match two maps and print the correspondence as JSON.
    Match(MatchArgs),
    /// Run the solver x affinity x subgraph-size accuracy benchmark.
    Bench(BenchArgs),
    /// Write a map as a Graphviz document.
    ExportDot(ExportDotArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    n_objects: Option<usize>,
    #[arg(long)]
    n_classes: Option<usize>,
    #[arg(long)]
    embedding_dim: Option<usize>,
    #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"])]
    extent_m: Option<Vec<f64>>,
    #[arg(long)]
    position_noise_std_m: Option<f64>,
    #[arg(long)]
    embedding_noise_std: Option<f64>,
    #[arg(long)]
    object_spread: Option<f64>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    uncertainty_range: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    subgraph_sizes: Option<Vec<usize>>,
    #[arg(long)]
    edge_threshold_m: Option<f64>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    scenario: ScenarioArgs,
}

#[derive(Args)]
struct BuildMapArgs {
    #[arg(long)]
    observations: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "local")]
    frame_id: String,
    #[arg(long)]
    edge_threshold_m: Option<f64>,
    #[arg(long)]
    cos_min: Option<f64>,
    #[arg(long)]
    maha_max: Option<f64>,
    #[arg(long)]
    temporal_window_s: Option<f64>,
    #[arg(long)]
    allow_global_closure: bool,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long)]
    affinity: Option<NodeMetric>,
    #[arg(long)]
    edge_sigma: Option<f64>,
    #[arg(long)]
    timeout_s: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    astar_beam: Option<usize>,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    map1: PathBuf,
    #[arg(long)]
    map2: PathBuf,
    #[arg(long)]
    solver: Option<Solver>,
    #[command(flatten)]
    solver_args: SolverArgs,
    /// Ground-truth file; adds an `accuracy` field to the output.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dot: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Include wall-clock timings in the output.
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [Solver::Astar, Solver::Rrwm, Solver::Spectral])]
    solvers: Vec<Solver>,
    #[arg(long, value_delimiter = ',', default_values_t = NodeMetric::ALL)]
    affinities: Vec<NodeMetric>,
    #[command(flatten)]
    solver_args: SolverArgs,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Include mean timings in the JSON report.
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct ExportDotArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Ground-truth correspondence from a query map to its parent scene.
#[derive(Debug, Serialize, Deserialize)]
struct TruthFile {
    schema: String,
    map1: String,
    map2: String,
    /// `[map1 id, map2 id]` pairs.
    pairs: Vec<[NodeId; 2]>,
}

fn apply_scenario(cfg: &mut Config, a: &ScenarioArgs) {
    let s = &mut cfg.scenario;
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = a.$field.clone() { s.$field = v; } )* };
    }
    set!(seed, trials, n_objects, n_classes, embedding_dim, position_noise_std_m, embedding_noise_std,
        object_spread, subgraph_sizes, edge_threshold_m);
    if let Some(e) = &a.extent_m {
        s.extent_m = [e[0], e[1], e[2]];
    }
    if let Some(u) = &a.uncertainty_range {
        s.uncertainty_range = [u[0], u[1]];
    }
}

fn apply_solver(cfg: &mut Config, a: &SolverArgs) {
    if let Some(m) = a.affinity {
        cfg.affinity.node_metric = m;
    }
    if let Some(v) = a.edge_sigma {
        cfg.affinity.edge_sigma = v;
    }
    let p = &mut cfg.solver.params;
    if let Some(v) = a.timeout_s {
        p.timeout_s = v;
    }
    if let Some(v) = a.max_iters {
        p.max_iters = v;
    }
    if let Some(v) = a.tol {
        p.tol = v;
    }
    if let Some(v) = a.astar_beam {
        p.astar_beam = v;
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn read_map(path: &Path) -> Result<ObjectGraph, CliError> {
    MapFile::read(path).map_err(invalid)
}

fn json_pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serialisable") + "\n"
}

fn cmd_gen(mut cfg: Config, a: GenArgs) -> Result<(), CliError> {
    apply_scenario(&mut cfg, &a.scenario);
    let spec = cfg.scenario;
    spec.validate().map_err(invalid)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| invalid(format!("{}: {e}", a.out_dir.display())))?;
    for trial in 0..spec.trials {
        let mut rng = spec.trial_rng(trial);
        let scene = generate_scene(&spec, &mut rng).map_err(invalid)?;
        let scene_name = format!("scene_{trial}.json");
        MapFile::write(&scene.map, &a.out_dir.join(&scene_name)).map_err(invalid)?;
        for &size in &spec.subgraph_sizes {
            let query = sample_query(&spec, &scene, size, &mut rng).map_err(invalid)?;
            let query_name = format!("query_{trial}_{size}.json");
            MapFile::write(&query.graph, &a.out_dir.join(&query_name)).map_err(invalid)?;
            let truth = TruthFile {
                schema: SCHEMA.to_string(),
                map1: query_name,
                map2: scene_name.clone(),
                pairs: query.truth.iter().map(|(&q, &s)| [q, s]).collect(),
            };
            write_text(&a.out_dir.join(format!("truth_{trial}_{size}.json")), &json_pretty(&truth))?;
        }
        let stream = observation_stream(&spec, &scene, &mut rng);
        let path = a.out_dir.join(format!("observations_{trial}.jsonl"));
        let file = File::create(&path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        write_observation_stream(&mut w, spec.embedding_dim, &stream)
            .and_then(|_| w.flush())
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    }
    eprintln!("wrote {} trial(s) to {}", spec.trials, a.out_dir.display());
    Ok(())
}

fn cmd_build_map(mut cfg: Config, a: BuildMapArgs) -> Result<(), CliError> {
    let g = &mut cfg.gates;
    if let Some(v) = a.cos_min {
        g.cos_min = v;
    }
    if let Some(v) = a.maha_max {
        g.maha_max = v;
    }
    if let Some(v) = a.temporal_window_s {
        g.temporal_window_s = v;
    }
    if a.allow_global_closure {
        g.allow_global_closure = true;
    }
    let threshold = a.edge_threshold_m.unwrap_or(cfg.scenario.edge_threshold_m);
    let file = File::open(&a.observations).map_err(|e| invalid(format!("{}: {e}", a.observations.display())))?;
    let (_, observations) = read_observation_stream(BufReader::new(file))
        .map_err(|e| invalid(format!("{}: {e}", a.observations.display())))?;
    let mut map = LocalMap::new();
    for obs in &observations {
        map.ingest(obs, &cfg.gates).map_err(invalid)?;
    }
    let graph = map.finalize(&a.frame_id, threshold).map_err(invalid)?;
    MapFile::write(&graph, &a.out).map_err(invalid)?;
    eprintln!("{} observations -> {} landmarks, {} edges", observations.len(), graph.len(), graph.edges().len());
    Ok(())
}

fn cmd_match(mut cfg: Config, a: MatchArgs) -> Result<(), CliError> {
    apply_solver(&mut cfg, &a.solver_args);
    let solver = a.solver.unwrap_or(cfg.solver.name);
    let g1 = read_map(&a.map1)?;
    let g2 = read_map(&a.map2)?;
    let outcome = match_graphs(&g1, &g2, &cfg.affinity, solver, &cfg.solver.params)?;
    let report = if a.timings { outcome.report_with_timings() } else { outcome.report() };
    let mut value = serde_json::to_value(&report).map_err(invalid)?;
    if let Some(path) = &a.truth {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let truth: TruthFile = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let truth: BTreeMap<NodeId, NodeId> = truth.pairs.iter().map(|p| (p[0], p[1])).collect();
        value["accuracy"] = serde_json::json!(outcome.accuracy(&truth));
    }
    if let Some(path) = &a.dot {
        write_text(path, &match_dot(&g1, &g2, &outcome.pairs))?;
    }
    if let Some(path) = &a.svg {
        write_text(path, &match_svg(&g1, &g2, &outcome.pairs))?;
    }
    let text = json_pretty(&value);
    match &a.out {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_bench(mut cfg: Config, a: BenchArgs) -> Result<(), CliError> {
    apply_scenario(&mut cfg, &a.scenario);
    apply_solver(&mut cfg, &a.solver_args);
    let plan = BenchPlan {
        spec: cfg.scenario,
        solvers: a.solvers,
        metrics: a.affinities,
        affinity: cfg.affinity,
        params: cfg.solver.params,
    };
    let report = run_bench(&plan, a.timings)?;
    print!("{}", report.table());
    if let Some(path) = &a.json {
        write_text(path, &json_pretty(&report))?;
    }
    Ok(())
}

fn cmd_export_dot(a: ExportDotArgs) -> Result<(), CliError> {
    let dot = graph_dot(&read_map(&a.map)?);
    match &a.out {
        Some(path) => write_text(path, &dot),
        None => {
            print!("{dot}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path).map_err(invalid)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Gen(a) => cmd_gen(cfg, a),
        Command::BuildMap(a) => cmd_build_map(cfg, a),
        Command::Match(a) => cmd_match(cfg, a),
        Command::Bench(a) => cmd_bench(cfg, a),
        Command::ExportDot(a) => cmd_export_dot(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
