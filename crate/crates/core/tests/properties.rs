use std::collections::BTreeSet;

use proptest::prelude::*;

use constellation::affinity::{AffinityConfig, AffinityMatrix, NodeMetric};
use constellation::graph::{build_edges, GraphEdge, ObjectGraph, ObjectNode};
use constellation::scenario::{generate_scene, sample_query, ScenarioSpec};
use constellation::solvers::{
    brute_force, hungarian_round, match_graphs, solve_astar_matrix, SoftMatch, Solver, SolverParams,
};
use constellation::uncertainty::{kalman_init, kalman_update, LandmarkBelief};

fn node_strategy(dim: usize) -> impl Strategy<Value = ([f64; 3], Vec<f64>, f64)> {
    (
        prop::array::uniform3(-5.0..5.0f64),
        prop::collection::vec(-1.0..1.0f64, dim).prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3)),
        0.0..0.5f64,
    )
}

fn graph_strategy(min: usize, max: usize, dim: usize) -> impl Strategy<Value = ObjectGraph> {
    prop::collection::vec(node_strategy(dim), min..=max).prop_map(|raw| {
        let nodes = raw.into_iter().enumerate().map(|(k, (p, e, u))| ObjectNode::new(k as u64 * 3 + 1, p, e, u)).collect();
        ObjectGraph::new("g", nodes, 2.0).unwrap()
    })
}

fn connected(n: usize, ids: &[u64], edges: &[GraphEdge]) -> bool {
    let mut reached = BTreeSet::from([ids[0]]);
    loop {
        let before = reached.len();
        for e in edges {
            if reached.contains(&e.i) || reached.contains(&e.j) {
                reached.insert(e.i);
                reached.insert(e.j);
            }
        }
        if reached.len() == before {
            return reached.len() == n;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn edges_always_connect_and_respect_threshold(g in graph_strategy(1, 12, 3), t in 0.1..4.0f64) {
        let edges = build_edges(g.nodes(), t).unwrap();
        let ids: Vec<u64> = g.nodes().iter().map(|n| n.id).collect();
        prop_assert!(connected(ids.len(), &ids, &edges));
        for w in edges.windows(2) {
            prop_assert!((w[0].i, w[0].j) < (w[1].i, w[1].j));
        }
        // every pair closer than the threshold is an edge
        let set: BTreeSet<(u64, u64)> = edges.iter().map(|e| (e.i, e.j)).collect();
        for (a, na) in g.nodes().iter().enumerate() {
            for nb in &g.nodes()[a + 1..] {
                if na.distance_to(nb) < t {
                    prop_assert!(set.contains(&(na.id, nb.id)));
                }
            }
        }
    }

    #[test]
    fn threshold_edges_grow_with_threshold(g in graph_strategy(2, 10, 3), t in 0.1..3.0f64, dt in 0.0..2.0f64) {
        let close = |t: f64| -> BTreeSet<(u64, u64)> {
            build_edges(g.nodes(), t).unwrap().into_iter().filter(|e| e.length < t).map(|e| (e.i, e.j)).collect()
        };
        prop_assert!(close(t).is_subset(&close(t + dt)));
    }

    #[test]
    fn kalman_fusion_is_order_invariant(
        prior in prop::collection::vec((-2.0..2.0f64, 0.01..2.0f64), 1..16),
        ms in prop::collection::vec(prop::collection::vec((-2.0..2.0f64, 0.01..2.0f64), 16), 2..5),
    ) {
        let d = prior.len();
        let b0 = kalman_init(&prior.iter().map(|p| p.0).collect::<Vec<_>>(), &prior.iter().map(|p| p.1).collect::<Vec<_>>()).unwrap();
        let fuse = |order: &mut dyn Iterator<Item = &Vec<(f64, f64)>>| {
            let mut b = b0.clone();
            for m in order {
                let y: Vec<f64> = m[..d].iter().map(|x| x.0).collect();
                let r: Vec<f64> = m[..d].iter().map(|x| x.1).collect();
                b = kalman_update(&b, &y, &r).unwrap();
            }
            b
        };
        let fwd = fuse(&mut ms.iter());
        let rev = fuse(&mut ms.iter().rev());
        for k in 0..d {
            prop_assert!((fwd.mean[k] - rev.mean[k]).abs() < 1e-9);
            prop_assert!((fwd.var[k] - rev.var[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn kalman_matches_information_form_and_shrinks(
        entries in prop::collection::vec((-3.0..3.0f64, 0.01..3.0f64, -3.0..3.0f64, 0.01..3.0f64), 1..32),
    ) {
        let mean: Vec<f64> = entries.iter().map(|e| e.0).collect();
        let var: Vec<f64> = entries.iter().map(|e| e.1).collect();
        let y: Vec<f64> = entries.iter().map(|e| e.2).collect();
        let r: Vec<f64> = entries.iter().map(|e| e.3).collect();
        let b = kalman_update(&kalman_init(&mean, &var).unwrap(), &y, &r).unwrap();
        for k in 0..mean.len() {
            let info = 1.0 / var[k] + 1.0 / r[k];
            prop_assert!((b.var[k] - 1.0 / info).abs() < 1e-12);
            prop_assert!((b.mean[k] - (mean[k] / var[k] + y[k] / r[k]) / info).abs() < 1e-9);
            prop_assert!(b.var[k] <= var[k] && b.var[k] <= r[k]);
        }
        prop_assert_eq!(b.n_updates, 2);
    }

    #[test]
    fn affinity_matrix_invariants(g1 in graph_strategy(1, 5, 4), g2 in graph_strategy(1, 5, 4), m in 0..3usize) {
        let cfg = AffinityConfig::with_metric(NodeMetric::ALL[m]);
        let k = AffinityMatrix::build(&g1, &g2, &cfg).unwrap();
        prop_assert!(k.check_invariants().is_ok());
        prop_assert!(k.n1() <= k.n2());
        prop_assert_eq!(k.swapped(), g1.len() > g2.len());
        for p in 0..k.size() {
            for q in 0..k.size() {
                let v = k.get(p, q);
                prop_assert!(v >= 0.0 && v.is_finite());
                prop_assert_eq!(v, k.get(q, p));
            }
        }
    }

    #[test]
    fn astar_equals_exhaustive_search(g1 in graph_strategy(1, 3, 3), g2 in graph_strategy(3, 5, 3)) {
        let k = AffinityMatrix::build(&g1, &g2, &AffinityConfig::default()).unwrap();
        let exact = brute_force(&k).unwrap();
        let found = solve_astar_matrix(&k, &SolverParams::default()).unwrap();
        prop_assert_eq!(found.objective, exact.objective);
        prop_assert!(found.is_valid(k.n1(), k.n2()));
    }

    #[test]
    fn hungarian_rounding_is_a_valid_maximum(scores in prop::collection::vec(0.0..1.0f64, 12), n1 in 1..4usize) {
        let n2 = 12 / 3;
        let n1 = n1.min(n2);
        let s = match SoftMatch::new(n1, n2, scores[..n1 * n2].to_vec()) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let h = hungarian_round(&s);
        prop_assert!(h.is_valid(n1, n2));
        // no single swap with an unused column improves the linear score
        let total = |a: &[usize]| a.iter().enumerate().map(|(i, &c)| s.get(i, c)).sum::<f64>();
        let best = total(&h.assignment);
        for i in 0..n1 {
            for c in 0..n2 {
                if h.assignment.contains(&c) {
                    continue;
                }
                let mut alt = h.assignment.clone();
                alt[i] = c;
                prop_assert!(total(&alt) <= best + 1e-12);
            }
        }
    }

    #[test]
    fn relabelling_nodes_relabels_the_match(g in graph_strategy(3, 5, 3), shift in 1000u64..2000) {
        let relabelled = ObjectGraph::new(
            "r",
            g.nodes().iter().map(|n| ObjectNode { id: n.id + shift, ..n.clone() }).collect(),
            g.edge_threshold(),
        ).unwrap();
        let p = SolverParams::default();
        let a = match_graphs(&g, &g, &AffinityConfig::default(), Solver::Astar, &p).unwrap();
        let b = match_graphs(&g, &relabelled, &AffinityConfig::default(), Solver::Astar, &p).unwrap();
        prop_assert_eq!(a.objective, b.objective);
        let shifted: Vec<_> = a.pairs.iter().map(|&(i, j)| (i, j + shift)).collect();
        prop_assert_eq!(shifted, b.pairs);
    }
}

#[test]
fn solvers_are_deterministic_on_generated_scenes() {
    let spec = ScenarioSpec { embedding_dim: 24, trials: 1, ..Default::default() };
    let mut rng = spec.trial_rng(7);
    let scene = generate_scene(&spec, &mut rng).unwrap();
    let q = sample_query(&spec, &scene, 4, &mut rng).unwrap();
    for solver in [Solver::Spectral, Solver::Rrwm, Solver::Astar] {
        let run = || match_graphs(&q.graph, &scene.map, &AffinityConfig::default(), solver, &SolverParams::default()).unwrap();
        let (a, b) = (run(), run());
        assert_eq!(a.pairs, b.pairs);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }
}

#[test]
fn belief_uncertainty_is_root_mean_variance() {
    let b = LandmarkBelief { mean: vec![0.0; 4], var: vec![0.01, 0.04, 0.09, 0.16], n_updates: 1 };
    assert!((b.scalar_uncertainty() - (0.075f64).sqrt()).abs() < 1e-15);
}
