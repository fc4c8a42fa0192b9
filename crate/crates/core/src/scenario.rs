//! Synthetic scenes standing in for recorded maps.
//!
//! A scene scatters objects uniformly in a box. Each object belongs to one
//! of `n_classes` random unit base embeddings and carries its own spread
//! around it. Query maps are connected subsets of the scene, re-observed with
//! fresh position noise, embedding noise and uncertainty draws, under new
//! ids. The generator records the ground-truth correspondence.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, NodeId, ObjectGraph, ObjectNode};
use crate::mapping::Observation;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("infeasible scenario: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub n_objects: usize,
    pub extent_m: [f64; 3],
    pub embedding_dim: usize,
    pub n_classes: usize,
    /// Per-axis standard deviation of re-observed positions, m.
    pub position_noise_std_m: f64,
    /// Per-coordinate standard deviation of re-observed embeddings.
    pub embedding_noise_std: f64,
    pub uncertainty_range: [f64; 2],
    /// Per-coordinate standard deviation of each object's offset from its
    /// class embedding, applied before normalisation.
    pub object_spread: f64,
    pub subgraph_sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub edge_threshold_m: f64,
    /// Minimum distance between scene objects; 0 disables rejection sampling.
    pub min_separation_m: f64,
    /// Sightings per object in generated observation streams.
    pub observations_per_object: usize,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            n_objects: 20,
            extent_m: [30.0, 30.0, 2.0],
            embedding_dim: crate::graph::DEFAULT_EMBEDDING_DIM,
            n_classes: 5,
            position_noise_std_m: 0.2,
            embedding_noise_std: 0.05,
            uncertainty_range: [0.05, 0.4],
            object_spread: 0.04,
            subgraph_sizes: vec![2, 3, 4, 5],
            trials: 100,
            seed: 0,
            edge_threshold_m: crate::graph::UNDERWATER_EDGE_THRESHOLD_M,
            min_separation_m: 0.0,
            observations_per_object: 3,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Infeasible(m));
        if self.n_objects == 0 {
            return bad("n_objects must be positive".into());
        }
        if self.embedding_dim == 0 || self.n_classes == 0 {
            return bad("embedding_dim and n_classes must be positive".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if let Some(&s) = self.subgraph_sizes.iter().find(|&&s| s == 0 || s > self.n_objects) {
            return bad(format!("subgraph size {s} outside 1..={}", self.n_objects));
        }
        if self.extent_m.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return bad("extent must be finite and non-negative".into());
        }
        let [lo, hi] = self.uncertainty_range;
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return bad(format!("uncertainty range [{lo}, {hi}]"));
        }
        for (name, v) in [
            ("position_noise_std_m", self.position_noise_std_m),
            ("embedding_noise_std", self.embedding_noise_std),
            ("object_spread", self.object_spread),
            ("min_separation_m", self.min_separation_m),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} = {v}"));
            }
        }
        if !(self.edge_threshold_m > 0.0) {
            return bad(format!("edge_threshold_m = {}", self.edge_threshold_m));
        }
        Ok(())
    }

    pub fn is_noise_free(&self) -> bool {
        self.position_noise_std_m == 0.0 && self.embedding_noise_std == 0.0
    }

    /// Independent generator for one trial.
    pub fn trial_rng(&self, trial: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial as u64);
        rng
    }
}

/// A full reference map with per-object class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub map: ObjectGraph,
    pub classes: Vec<usize>,
}

/// A re-observed subset of a scene with its ground truth (query id -> scene id).
#[derive(Debug, Clone, PartialEq)]
pub struct QueryMap {
    pub graph: ObjectGraph,
    pub truth: BTreeMap<NodeId, NodeId>,
}

fn random_unit(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 0.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `v` plus isotropic Gaussian noise of per-coordinate std `per`.
fn perturb(rng: &mut impl Rng, v: &[f64], per: f64) -> Vec<f64> {
    if per == 0.0 {
        return v.to_vec();
    }
    v.iter()
        .map(|x| {
            let z: f64 = StandardNormal.sample(rng);
            x + per * z
        })
        .collect()
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn jitter(rng: &mut impl Rng, p: [f64; 3], std: f64) -> [f64; 3] {
    if std == 0.0 {
        return p;
    }
    let n = Normal::new(0.0, std).expect("finite std");
    [p[0] + n.sample(rng), p[1] + n.sample(rng), p[2] + n.sample(rng)]
}

pub fn generate_scene(spec: &ScenarioSpec, rng: &mut impl Rng) -> Result<Scene, ScenarioError> {
    spec.validate()?;
    let bases: Vec<Vec<f64>> = (0..spec.n_classes).map(|_| random_unit(rng, spec.embedding_dim)).collect();
    let mut positions: Vec<[f64; 3]> = Vec::with_capacity(spec.n_objects);
    let mut attempts = 0usize;
    while positions.len() < spec.n_objects {
        attempts += 1;
        if attempts > 10_000 * spec.n_objects {
            return Err(ScenarioError::Infeasible(format!(
                "cannot place {} objects {} m apart",
                spec.n_objects, spec.min_separation_m
            )));
        }
        let e = spec.extent_m;
        let p = [uniform(rng, 0.0, e[0]), uniform(rng, 0.0, e[1]), uniform(rng, 0.0, e[2])];
        if spec.min_separation_m > 0.0
            && positions.iter().any(|q| crate::graph::distance(&p, q) < spec.min_separation_m)
        {
            continue;
        }
        positions.push(p);
    }
    let mut classes = Vec::with_capacity(spec.n_objects);
    let mut nodes = Vec::with_capacity(spec.n_objects);
    for (k, p) in positions.into_iter().enumerate() {
        let class = rng.random_range(0..spec.n_classes);
        let mut emb = perturb(rng, &bases[class], spec.object_spread);
        let n = norm(&emb);
        emb.iter_mut().for_each(|x| *x /= n);
        let u = uniform(rng, spec.uncertainty_range[0], spec.uncertainty_range[1]);
        classes.push(class);
        nodes.push(ObjectNode::new(k as NodeId, p, emb, u));
    }
    let map = ObjectGraph::new("scene", nodes, spec.edge_threshold_m)?;
    Ok(Scene { map, classes })
}

/// Grows a random connected set of `size` scene nodes from a random seed node.
pub fn sample_connected(map: &ObjectGraph, size: usize, rng: &mut impl Rng) -> Vec<NodeId> {
    let adj = map.adjacency();
    let n = map.len();
    let size = size.min(n);
    let mut inside = vec![false; n];
    let start = rng.random_range(0..n);
    inside[start] = true;
    let mut chosen = vec![start];
    while chosen.len() < size {
        let mut frontier: Vec<usize> =
            chosen.iter().flat_map(|&v| adj[v].iter().map(|e| e.0)).filter(|&w| !inside[w]).collect();
        frontier.sort_unstable();
        frontier.dedup();
        let next = frontier[rng.random_range(0..frontier.len())];
        inside[next] = true;
        chosen.push(next);
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|k| map.nodes()[k].id).collect()
}

/// Re-observes the given scene nodes under shuffled fresh ids `0..ids.len()`.
/// Noise-free specs copy the scene nodes exactly, uncertainty included.
pub fn reobserve(
    spec: &ScenarioSpec,
    scene: &Scene,
    ids: &[NodeId],
    rng: &mut impl Rng,
) -> Result<QueryMap, ScenarioError> {
    let mut new_ids: Vec<NodeId> = (0..ids.len() as NodeId).collect();
    new_ids.shuffle(rng);
    let mut nodes = Vec::with_capacity(ids.len());
    let mut truth = BTreeMap::new();
    for (&old, &new) in ids.iter().zip(&new_ids) {
        let parent = scene.map.node(old).ok_or_else(|| GraphError::UnknownIds(vec![old]))?;
        let node = if spec.is_noise_free() {
            ObjectNode { id: new, ..parent.clone() }
        } else {
            let position = jitter(rng, parent.position, spec.position_noise_std_m);
            let embedding = perturb(rng, &parent.embedding_mean, spec.embedding_noise_std);
            let u = uniform(rng, spec.uncertainty_range[0], spec.uncertainty_range[1]);
            ObjectNode::new(new, position, embedding, u)
        };
        nodes.push(node);
        truth.insert(new, old);
    }
    let graph = ObjectGraph::new("query", nodes, spec.edge_threshold_m)?;
    Ok(QueryMap { graph, truth })
}

pub fn sample_query(
    spec: &ScenarioSpec,
    scene: &Scene,
    size: usize,
    rng: &mut impl Rng,
) -> Result<QueryMap, ScenarioError> {
    let ids = sample_connected(&scene.map, size, rng);
    reobserve(spec, scene, &ids, rng)
}

/// Observation stream visiting every scene object `observations_per_object`
/// times, one sighting per second, in lawnmower passes over the scene.
pub fn observation_stream(spec: &ScenarioSpec, scene: &Scene, rng: &mut impl Rng) -> Vec<Observation> {
    let mut order: Vec<&ObjectNode> = scene.map.nodes().iter().collect();
    order.sort_by(|a, b| a.position[0].total_cmp(&b.position[0]).then(a.id.cmp(&b.id)));
    let pos_var = spec.position_noise_std_m.powi(2) + 1e-4;
    let mut out = Vec::new();
    let mut t = 0.0;
    for _ in 0..spec.observations_per_object {
        for node in &order {
            let u = uniform(rng, spec.uncertainty_range[0], spec.uncertainty_range[1]);
            out.push(Observation {
                t,
                position_world: jitter(rng, node.position, spec.position_noise_std_m),
                position_var: [pos_var; 3],
                embedding: perturb(rng, &node.embedding_mean, spec.embedding_noise_std),
                image_uncertainty: u,
            });
            t += 1.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ScenarioSpec {
        ScenarioSpec { embedding_dim: 16, n_objects: 12, trials: 1, ..Default::default() }
    }

    #[test]
    fn scene_is_connected_and_unit_norm() {
        let spec = small_spec();
        let scene = generate_scene(&spec, &mut spec.trial_rng(0)).unwrap();
        assert_eq!(scene.map.len(), 12);
        assert!(scene.map.is_connected());
        for n in scene.map.nodes() {
            assert!((norm(&n.embedding_mean) - 1.0).abs() < 1e-12);
            let [lo, hi] = spec.uncertainty_range;
            assert!(n.scalar_uncertainty >= lo && n.scalar_uncertainty <= hi);
        }
    }

    #[test]
    fn zero_noise_query_copies_parents() {
        let spec = ScenarioSpec { position_noise_std_m: 0.0, embedding_noise_std: 0.0, ..small_spec() };
        let mut rng = spec.trial_rng(3);
        let scene = generate_scene(&spec, &mut rng).unwrap();
        let q = sample_query(&spec, &scene, 5, &mut rng).unwrap();
        assert_eq!(q.graph.len(), 5);
        for n in q.graph.nodes() {
            let parent = scene.map.node(q.truth[&n.id]).unwrap();
            assert_eq!(ObjectNode { id: parent.id, ..n.clone() }, *parent);
        }
    }

    #[test]
    fn sampled_subsets_are_connected_in_the_scene() {
        let spec = small_spec();
        let mut rng = spec.trial_rng(1);
        let scene = generate_scene(&spec, &mut rng).unwrap();
        for size in 1..=6 {
            let ids = sample_connected(&scene.map, size, &mut rng);
            assert_eq!(ids.len(), size);
            // connected through scene edges among the chosen nodes
            let set: std::collections::BTreeSet<_> = ids.iter().copied().collect();
            let mut reached = std::collections::BTreeSet::from([ids[0]]);
            loop {
                let before = reached.len();
                for e in scene.map.edges() {
                    if set.contains(&e.i) && set.contains(&e.j) && (reached.contains(&e.i) || reached.contains(&e.j)) {
                        reached.insert(e.i);
                        reached.insert(e.j);
                    }
                }
                if reached.len() == before {
                    break;
                }
            }
            assert_eq!(reached, set);
        }
    }

    #[test]
    fn same_seed_same_scene() {
        let spec = small_spec();
        let a = generate_scene(&spec, &mut spec.trial_rng(0)).unwrap();
        let b = generate_scene(&spec, &mut spec.trial_rng(0)).unwrap();
        let c = generate_scene(&spec, &mut spec.trial_rng(1)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn single_class_heavy_noise_is_still_valid() {
        let spec = ScenarioSpec { n_classes: 1, embedding_noise_std: 5.0, ..small_spec() };
        let mut rng = spec.trial_rng(0);
        let scene = generate_scene(&spec, &mut rng).unwrap();
        let q = sample_query(&spec, &scene, 4, &mut rng).unwrap();
        assert_eq!(q.truth.len(), 4);
    }

    #[test]
    fn infeasible_specs() {
        let spec = ScenarioSpec { subgraph_sizes: vec![30], ..small_spec() };
        assert!(matches!(spec.validate(), Err(ScenarioError::Infeasible(_))));
        let spec = ScenarioSpec { trials: 0, ..small_spec() };
        assert!(spec.validate().is_err());
        let spec = ScenarioSpec { extent_m: [1.0, 1.0, 0.0], min_separation_m: 5.0, ..small_spec() };
        assert!(generate_scene(&spec, &mut spec.trial_rng(0)).is_err());
    }
}
