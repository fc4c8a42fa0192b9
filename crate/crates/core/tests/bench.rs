use constellation::affinity::NodeMetric;
use constellation::bench::{run_bench, BenchPlan};
use constellation::scenario::ScenarioSpec;
use constellation::solvers::Solver;

#[test]
fn zero_noise_gives_perfect_accuracy_for_every_combination() {
    let spec = ScenarioSpec { position_noise_std_m: 0.0, embedding_noise_std: 0.0, trials: 20, ..Default::default() };
    let report = run_bench(&BenchPlan::new(spec), false).unwrap();
    for row in &report.rows {
        for cell in &row.cells {
            assert_eq!(cell.accuracy, Some(1.0), "{:?} {:?} size {}", row.solver, row.affinity, cell.size);
        }
    }
}

#[test]
fn weighted_cosine_beats_mahalanobis_under_rrwm_across_seeds() {
    let mut wins = 0;
    let draws = 10;
    for seed in 0..draws {
        let spec = ScenarioSpec { trials: 20, seed, ..Default::default() };
        let mut plan = BenchPlan::new(spec);
        plan.solvers = vec![Solver::Rrwm];
        plan.metrics = vec![NodeMetric::WeightedCosine, NodeMetric::Mahalanobis];
        let r = run_bench(&plan, false).unwrap();
        let avg = |m| r.row(Solver::Rrwm, m).unwrap().average.unwrap();
        if avg(NodeMetric::WeightedCosine) >= avg(NodeMetric::Mahalanobis) {
            wins += 1;
        }
    }
    assert!(wins * 10 >= draws * 8, "{wins} of {draws}");
}

#[test]
fn aggregate_column_is_the_row_mean() {
    let spec = ScenarioSpec { trials: 5, embedding_dim: 32, ..Default::default() };
    let report = run_bench(&BenchPlan::new(spec), false).unwrap();
    for row in &report.rows {
        let accs: Vec<f64> = row.cells.iter().map(|c| c.accuracy.unwrap()).collect();
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        assert!((row.average.unwrap() - mean).abs() <= 1e-12);
        assert!(accs.iter().all(|a| (0.0..=1.0).contains(a)));
    }
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let spec = ScenarioSpec { trials: 8, embedding_dim: 32, ..Default::default() };
    let plan = BenchPlan::new(spec);
    let parallel = run_bench(&plan, false).unwrap();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run_bench(&plan, false).unwrap());
    assert_eq!(serde_json::to_string(&parallel).unwrap(), serde_json::to_string(&single).unwrap());
}
