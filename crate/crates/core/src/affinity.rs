//! Node and edge affinities, and the Lawler QAP affinity matrix `K`.
//!
//! `K` is indexed by node-pair hypotheses: index `i + a * n1` stands for
//! "node `i` of graph 1 matches node `a` of graph 2". The diagonal holds node
//! affinities and the off-diagonal holds edge affinities, which are nonzero
//! only where both graphs have the corresponding edge. The off-diagonal is
//! stored row-compressed and symmetric.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ObjectGraph, ObjectNode};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AffinityError {
    #[error("embedding dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("embedding has zero norm")]
    ZeroNorm,
    #[error("variance must be positive in every coordinate")]
    ZeroVariance,
    #[error("empty graph")]
    EmptyGraph,
    #[error("invalid affinity config: {0}")]
    InvalidConfig(String),
    #[error("invalid matrix entry: {0}")]
    InvalidEntry(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeMetric {
    WeightedCosine,
    Bhattacharyya,
    Mahalanobis,
}

impl NodeMetric {
    pub const ALL: [NodeMetric; 3] =
        [NodeMetric::WeightedCosine, NodeMetric::Bhattacharyya, NodeMetric::Mahalanobis];

    pub fn name(self) -> &'static str {
        match self {
            NodeMetric::WeightedCosine => "weighted_cosine",
            NodeMetric::Bhattacharyya => "bhattacharyya",
            NodeMetric::Mahalanobis => "mahalanobis",
        }
    }

    pub fn short_label(self) -> &'static str {
        match self {
            NodeMetric::WeightedCosine => "Unc. Cos",
            NodeMetric::Bhattacharyya => "Bhatt.",
            NodeMetric::Mahalanobis => "Mah.",
        }
    }
}

impl std::fmt::Display for NodeMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for NodeMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "weighted_cosine" | "cosine" => Ok(NodeMetric::WeightedCosine),
            "bhattacharyya" => Ok(NodeMetric::Bhattacharyya),
            "mahalanobis" => Ok(NodeMetric::Mahalanobis),
            other => Err(format!("unknown affinity {other:?}")),
        }
    }
}

/// Default edge sigma (m²) for underwater-scale maps.
pub const UNDERWATER_EDGE_SIGMA: f64 = 0.5;
/// Default edge sigma (m²) for vehicle-scale maps.
pub const VEHICLE_EDGE_SIGMA: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AffinityConfig {
    pub node_metric: NodeMetric,
    /// Width of the Gaussian edge affinity, m².
    pub edge_sigma: f64,
    /// Scale `γ` in `exp(-d / γ)` for the two distance-based metrics.
    pub distance_to_affinity_scale: f64,
}

impl Default for AffinityConfig {
    fn default() -> Self {
        AffinityConfig {
            node_metric: NodeMetric::WeightedCosine,
            edge_sigma: UNDERWATER_EDGE_SIGMA,
            distance_to_affinity_scale: 1.0,
        }
    }
}

impl AffinityConfig {
    pub fn with_metric(metric: NodeMetric) -> Self {
        AffinityConfig { node_metric: metric, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), AffinityError> {
        if !(self.edge_sigma > 0.0 && self.edge_sigma.is_finite()) {
            return Err(AffinityError::InvalidConfig(format!("edge_sigma = {}", self.edge_sigma)));
        }
        if !(self.distance_to_affinity_scale > 0.0 && self.distance_to_affinity_scale.is_finite()) {
            return Err(AffinityError::InvalidConfig(format!(
                "distance_to_affinity_scale = {}",
                self.distance_to_affinity_scale
            )));
        }
        Ok(())
    }

    pub fn node_affinity(&self, a: &ObjectNode, b: &ObjectNode) -> Result<f64, AffinityError> {
        let gamma = self.distance_to_affinity_scale;
        match self.node_metric {
            NodeMetric::WeightedCosine => node_affinity_weighted_cosine(a, b),
            NodeMetric::Bhattacharyya => Ok((-bhattacharyya_distance(a, b)? / gamma).exp()),
            NodeMetric::Mahalanobis => Ok((-mahalanobis_distance(a, b)? / gamma).exp()),
        }
    }
}

fn check_dims(a: &ObjectNode, b: &ObjectNode) -> Result<(), AffinityError> {
    if a.dim() != b.dim() {
        return Err(AffinityError::DimMismatch(a.dim(), b.dim()));
    }
    Ok(())
}

/// Cosine similarity of the embedding means scaled by `1 / (1 + (σa + σb) / 2)`.
pub fn node_affinity_weighted_cosine(a: &ObjectNode, b: &ObjectNode) -> Result<f64, AffinityError> {
    check_dims(a, b)?;
    let cos = cosine_similarity(&a.embedding_mean, &b.embedding_mean).ok_or(AffinityError::ZeroNorm)?;
    Ok(cos / (1.0 + (a.scalar_uncertainty + b.scalar_uncertainty) / 2.0))
}

/// `None` when either vector has zero norm.
pub fn cosine_similarity(x: &[f64], y: &[f64]) -> Option<f64> {
    let mut dot = 0.0;
    let mut nx = 0.0;
    let mut ny = 0.0;
    for (a, b) in x.iter().zip(y) {
        dot += a * b;
        nx += a * a;
        ny += b * b;
    }
    if nx == 0.0 || ny == 0.0 {
        return None;
    }
    Some((dot / (nx.sqrt() * ny.sqrt())).clamp(-1.0, 1.0))
}

/// Bhattacharyya distance between two diagonal Gaussians, using the pooled
/// covariance `(Σa + Σb) / 2`. Determinants are handled as sums of logs.
pub fn bhattacharyya_distance(a: &ObjectNode, b: &ObjectNode) -> Result<f64, AffinityError> {
    check_dims(a, b)?;
    let mut quad = 0.0;
    let mut logdet = 0.0;
    for d in 0..a.dim() {
        let (va, vb) = (a.embedding_var[d], b.embedding_var[d]);
        if !(va > 0.0 && vb > 0.0) {
            return Err(AffinityError::ZeroVariance);
        }
        let pooled = 0.5 * (va + vb);
        let diff = a.embedding_mean[d] - b.embedding_mean[d];
        quad += diff * diff / pooled;
        logdet += pooled.ln() - 0.5 * (va.ln() + vb.ln());
    }
    Ok(quad / 8.0 + 0.5 * logdet)
}

/// Mahalanobis distance between the two means under the pooled diagonal covariance.
pub fn mahalanobis_distance(a: &ObjectNode, b: &ObjectNode) -> Result<f64, AffinityError> {
    check_dims(a, b)?;
    let mut quad = 0.0;
    for d in 0..a.dim() {
        let (va, vb) = (a.embedding_var[d], b.embedding_var[d]);
        if !(va > 0.0 && vb > 0.0) {
            return Err(AffinityError::ZeroVariance);
        }
        let diff = a.embedding_mean[d] - b.embedding_mean[d];
        quad += diff * diff / (0.5 * (va + vb));
    }
    Ok(quad.sqrt())
}

pub fn node_affinity_bhattacharyya(a: &ObjectNode, b: &ObjectNode, gamma: f64) -> Result<f64, AffinityError> {
    Ok((-bhattacharyya_distance(a, b)? / gamma).exp())
}

pub fn node_affinity_mahalanobis(a: &ObjectNode, b: &ObjectNode, gamma: f64) -> Result<f64, AffinityError> {
    Ok((-mahalanobis_distance(a, b)? / gamma).exp())
}

/// Gaussian affinity of two edge lengths: `exp(-(len1 - len2)² / sigma)`.
pub fn edge_affinity(len1: f64, len2: f64, sigma: f64) -> f64 {
    let d = len1 - len2;
    (-(d * d) / sigma).exp()
}

/// Off-diagonal entry `((i, a), (j, b), value)` for [`AffinityMatrix::from_parts`].
pub type PairEntry = ((usize, usize), (usize, usize), f64);

/// Sparse symmetric QAP affinity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    n1: usize,
    n2: usize,
    swapped: bool,
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl AffinityMatrix {
    /// Builds `K` for `g1` against `g2`. When `g1` is the larger graph the
    /// two are swapped so that rows always index the smaller side; see
    /// [`AffinityMatrix::swapped`]. Negative node affinities are clamped to 0.
    pub fn build(g1: &ObjectGraph, g2: &ObjectGraph, cfg: &AffinityConfig) -> Result<Self, AffinityError> {
        Self::build_with_adjacency(g1, g2, &g1.adjacency(), &g2.adjacency(), cfg)
    }

    /// As [`AffinityMatrix::build`] with precomputed neighbor lists
    /// (see [`ObjectGraph::adjacency`]) for `g1` and `g2`.
    pub fn build_with_adjacency(
        g1: &ObjectGraph,
        g2: &ObjectGraph,
        adj_g1: &[Vec<(usize, f64)>],
        adj_g2: &[Vec<(usize, f64)>],
        cfg: &AffinityConfig,
    ) -> Result<Self, AffinityError> {
        cfg.validate()?;
        if g1.is_empty() || g2.is_empty() {
            return Err(AffinityError::EmptyGraph);
        }
        if g1.dim() != g2.dim() {
            return Err(AffinityError::DimMismatch(g1.dim(), g2.dim()));
        }
        let swapped = g1.len() > g2.len();
        let (small, large, adj1, adj2) =
            if swapped { (g2, g1, adj_g2, adj_g1) } else { (g1, g2, adj_g1, adj_g2) };
        let (n1, n2) = (small.len(), large.len());

        let diag = (0..n1 * n2)
            .into_par_iter()
            .map(|p| {
                let (i, a) = (p % n1, p / n1);
                cfg.node_affinity(&small.nodes()[i], &large.nodes()[a]).map(|v| v.max(0.0))
            })
            .collect::<Result<Vec<f64>, _>>()?;

        let sigma = cfg.edge_sigma;
        let rows: Vec<Vec<(u32, f64)>> = (0..n1 * n2)
            .into_par_iter()
            .map(|p| {
                let (i, a) = (p % n1, p / n1);
                let mut row = Vec::with_capacity(adj1[i].len() * adj2[a].len());
                for &(b, len_ab) in &adj2[a] {
                    for &(j, len_ij) in &adj1[i] {
                        row.push(((j + b * n1) as u32, edge_affinity(len_ij, len_ab, sigma)));
                    }
                }
                // b-major then j-ascending is already column order
                row
            })
            .collect();
        Ok(Self::from_rows(n1, n2, swapped, diag, rows))
    }

    fn from_rows(n1: usize, n2: usize, swapped: bool, diag: Vec<f64>, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        AffinityMatrix { n1, n2, swapped, diag, row_ptr, cols, vals }
    }

    /// Assembles a matrix from a diagonal and off-diagonal entries
    /// `((i, a), (j, b), value)`; each entry is mirrored to keep `K` symmetric.
    pub fn from_parts(
        n1: usize,
        n2: usize,
        diag: Vec<f64>,
        entries: &[PairEntry],
    ) -> Result<Self, AffinityError> {
        if n1 == 0 || n2 == 0 {
            return Err(AffinityError::EmptyGraph);
        }
        if n1 > n2 {
            return Err(AffinityError::InvalidEntry(format!("n1 = {n1} exceeds n2 = {n2}")));
        }
        if diag.len() != n1 * n2 {
            return Err(AffinityError::InvalidEntry(format!("diagonal has length {}", diag.len())));
        }
        if diag.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(AffinityError::InvalidEntry("diagonal must be finite and non-negative".into()));
        }
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n1 * n2];
        for &((i, a), (j, b), v) in entries {
            if i >= n1 || j >= n1 || a >= n2 || b >= n2 {
                return Err(AffinityError::InvalidEntry(format!("(({i},{a}),({j},{b})) out of range")));
            }
            if i == j || a == b {
                return Err(AffinityError::InvalidEntry(format!(
                    "(({i},{a}),({j},{b})) is not an edge pair"
                )));
            }
            if !(v.is_finite() && v >= 0.0) {
                return Err(AffinityError::InvalidEntry(format!("value {v}")));
            }
            let (p, q) = (i + a * n1, j + b * n1);
            for (r, c) in [(p, q), (q, p)] {
                match rows[r].iter_mut().find(|e| e.0 as usize == c) {
                    Some(e) => e.1 = v,
                    None => rows[r].push((c as u32, v)),
                }
            }
        }
        for row in &mut rows {
            row.sort_by_key(|e| e.0);
        }
        Ok(Self::from_rows(n1, n2, false, diag, rows))
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Side length `n1 * n2`.
    pub fn size(&self) -> usize {
        self.n1 * self.n2
    }

    /// True when rows index the second graph passed to [`AffinityMatrix::build`].
    pub fn swapped(&self) -> bool {
        self.swapped
    }

    pub fn index(&self, i: usize, a: usize) -> usize {
        i + a * self.n1
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn node_affinity(&self, i: usize, a: usize) -> f64 {
        self.diag[self.index(i, a)]
    }

    pub fn row(&self, p: usize) -> (&[u32], &[f64]) {
        let r = self.row_ptr[p]..self.row_ptr[p + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    /// Number of stored off-diagonal entries, counting both `(p, q)` and `(q, p)`.
    pub fn offdiag_nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, p: usize, q: usize) -> f64 {
        if p == q {
            return self.diag[p];
        }
        let (cols, vals) = self.row(p);
        match cols.binary_search(&(q as u32)) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn offdiag_iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.size()).flat_map(move |p| {
            let (cols, vals) = self.row(p);
            cols.iter().zip(vals).map(move |(&q, &v)| (p, q as usize, v))
        })
    }

    pub fn is_zero(&self) -> bool {
        self.diag.iter().all(|v| *v == 0.0) && self.vals.iter().all(|v| *v == 0.0)
    }

    pub fn max_row_sum(&self) -> f64 {
        (0..self.size())
            .map(|p| self.diag[p] + self.row(p).1.iter().sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `out = K x`.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        out.par_iter_mut().enumerate().for_each(|(p, o)| {
            let (cols, vals) = self.row(p);
            let mut acc = self.diag[p] * x[p];
            for (&q, &v) in cols.iter().zip(vals) {
                acc += v * x[q as usize];
            }
            *o = acc;
        });
    }

    /// `vec(X)ᵀ K vec(X)` for the assignment `row i -> column assignment[i]`.
    /// Summation order is fixed so equal assignments give bitwise-equal values.
    pub fn objective(&self, assignment: &[usize]) -> f64 {
        debug_assert_eq!(assignment.len(), self.n1);
        let mut total = 0.0;
        for (i, &a) in assignment.iter().enumerate() {
            let p = self.index(i, a);
            total += self.diag[p];
            let (cols, vals) = self.row(p);
            for (&q, &v) in cols.iter().zip(vals) {
                let q = q as usize;
                let (j, b) = (q % self.n1, q / self.n1);
                if assignment[j] == b {
                    total += v;
                }
            }
        }
        total
    }

    /// Checks symmetry and entrywise non-negativity of every stored value.
    pub fn check_invariants(&self) -> Result<(), String> {
        if let Some(v) = self.diag.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(format!("diagonal entry {v}"));
        }
        for (p, q, v) in self.offdiag_iter() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("K[{p},{q}] = {v}"));
            }
            let (i, a, j, b) = (p % self.n1, p / self.n1, q % self.n1, q / self.n1);
            if i == j || a == b {
                return Err(format!("K[{p},{q}] is not an edge pair"));
            }
            if self.get(q, p) != v {
                return Err(format!("K[{p},{q}] = {v} but K[{q},{p}] = {}", self.get(q, p)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: u64, pos: [f64; 3], emb: Vec<f64>, var: Vec<f64>, sigma: f64) -> ObjectNode {
        ObjectNode {
            id,
            position: pos,
            embedding_mean: emb,
            embedding_var: var,
            scalar_uncertainty: sigma,
            obs_count: 1,
            last_seen: 0.0,
        }
    }

    fn unit(sigma: f64) -> ObjectNode {
        node(0, [0.0; 3], vec![1.0, 0.0, 0.0], vec![1.0; 3], sigma)
    }

    #[test]
    fn weighted_cosine_examples() {
        assert_eq!(node_affinity_weighted_cosine(&unit(0.0), &unit(0.0)).unwrap(), 1.0);
        assert_eq!(node_affinity_weighted_cosine(&unit(1.0), &unit(1.0)).unwrap(), 0.5);
        let mut other = unit(0.3);
        other.embedding_mean = vec![0.0, 2.0, 0.0];
        assert_eq!(node_affinity_weighted_cosine(&unit(0.7), &other).unwrap(), 0.0);
        other.embedding_mean = vec![0.0; 3];
        assert_eq!(node_affinity_weighted_cosine(&unit(0.0), &other), Err(AffinityError::ZeroNorm));
    }

    #[test]
    fn bhattacharyya_examples() {
        let a = node(0, [0.0; 3], vec![0.0], vec![1.0], 0.0);
        assert_eq!(bhattacharyya_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(node_affinity_bhattacharyya(&a, &a, 1.0).unwrap(), 1.0);

        let b = node(1, [0.0; 3], vec![2.0], vec![1.0], 0.0);
        assert!((bhattacharyya_distance(&a, &b).unwrap() - 0.5).abs() < 1e-15);
        assert!((node_affinity_bhattacharyya(&a, &b, 2.0).unwrap() - (-0.25f64).exp()).abs() < 1e-15);

        let c = node(2, [0.0; 3], vec![0.0], vec![4.0], 0.0);
        let expected = 0.5 * (2.5f64 / 2.0).ln();
        assert!((bhattacharyya_distance(&a, &c).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.11157).abs() < 1e-5);

        let z = node(3, [0.0; 3], vec![0.0], vec![0.0], 0.0);
        assert_eq!(bhattacharyya_distance(&a, &z), Err(AffinityError::ZeroVariance));
    }

    #[test]
    fn bhattacharyya_high_dim_stays_finite() {
        // det of a 384-dim diagonal with entries 1e-3 underflows; the log-sum does not
        let a = node(0, [0.0; 3], vec![0.1; 384], vec![1e-3; 384], 0.0);
        let b = node(1, [0.0; 3], vec![0.1; 384], vec![2e-3; 384], 0.0);
        let d = bhattacharyya_distance(&a, &b).unwrap();
        let expected = 0.5 * 384.0 * (1.5e-3f64.ln() - 0.5 * (1e-3f64.ln() + 2e-3f64.ln()));
        assert!((d - expected).abs() < 1e-9);
    }

    #[test]
    fn mahalanobis_examples() {
        let a = node(0, [0.0; 3], vec![0.0], vec![1.0], 0.0);
        assert_eq!(node_affinity_mahalanobis(&a, &a, 1.0).unwrap(), 1.0);
        let b = node(1, [0.0; 3], vec![3.0], vec![1.0], 0.0);
        assert_eq!(mahalanobis_distance(&a, &b).unwrap(), 3.0);
        assert!((node_affinity_mahalanobis(&a, &b, 1.5).unwrap() - (-2.0f64).exp()).abs() < 1e-15);

        let a2 = node(0, [0.0; 3], vec![0.0], vec![2.0], 0.0);
        let b2 = node(1, [0.0; 3], vec![3.0], vec![2.0], 0.0);
        let ratio = mahalanobis_distance(&a2, &b2).unwrap() / 3.0;
        assert!((ratio - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn edge_affinity_examples() {
        assert_eq!(edge_affinity(3.0, 3.0, 0.5), 1.0);
        assert!((edge_affinity(2.0, 1.0, 1.0) - 0.36788).abs() < 1e-5);
        assert!(edge_affinity(0.0, 1e3, 1.0) < 1e-300);
    }

    fn graph(ids: &[u64], positions: &[[f64; 3]], embs: &[Vec<f64>]) -> ObjectGraph {
        let nodes = ids
            .iter()
            .zip(positions)
            .zip(embs)
            .map(|((&id, &p), e)| node(id, p, e.clone(), vec![0.01; e.len()], 0.0))
            .collect();
        ObjectGraph::new("t", nodes, 2.0).unwrap()
    }

    #[test]
    fn single_node_matrix() {
        let g = graph(&[0], &[[0.0; 3]], &[vec![1.0, 0.0]]);
        let k = AffinityMatrix::build(&g, &g, &AffinityConfig::default()).unwrap();
        assert_eq!(k.size(), 1);
        assert_eq!(k.diag(), &[1.0]);
        assert_eq!(k.offdiag_nnz(), 0);
    }

    #[test]
    fn two_edge_graphs_index_layout() {
        let g = graph(&[0, 1], &[[0.0; 3], [1.0, 0.0, 0.0]], &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let k = AffinityMatrix::build(&g, &g, &AffinityConfig::default()).unwrap();
        assert_eq!(k.size(), 4);
        assert_eq!(k.diag(), &[1.0, 0.0, 0.0, 1.0]);
        // (0,0) = 0, (1,0) = 1, (0,1) = 2, (1,1) = 3
        let stored: Vec<(usize, usize)> = k.offdiag_iter().map(|(p, q, _)| (p, q)).collect();
        assert_eq!(stored, vec![(0, 3), (1, 2), (2, 1), (3, 0)]);
        assert!(k.offdiag_iter().all(|(_, _, v)| v == 1.0));
        k.check_invariants().unwrap();
    }

    #[test]
    fn orthogonal_embeddings_zero_diagonal() {
        let g1 = graph(&[0, 1], &[[0.0; 3], [1.0, 0.0, 0.0]], &[vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]);
        let g2 = graph(&[0, 1], &[[0.0; 3], [1.0, 0.0, 0.0]], &[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let k = AffinityMatrix::build(&g1, &g2, &AffinityConfig::default()).unwrap();
        assert!(k.diag().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn negative_cosine_is_clamped() {
        let g1 = graph(&[0], &[[0.0; 3]], &[vec![1.0, 0.0]]);
        let g2 = graph(&[0], &[[0.0; 3]], &[vec![-1.0, 0.0]]);
        let k = AffinityMatrix::build(&g1, &g2, &AffinityConfig::default()).unwrap();
        assert_eq!(k.diag(), &[0.0]);
    }

    #[test]
    fn larger_first_graph_is_swapped() {
        let g1 = graph(&[0, 1], &[[0.0; 3], [1.0, 0.0, 0.0]], &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let g2 = graph(&[5], &[[0.0; 3]], &[vec![0.0, 1.0]]);
        let k = AffinityMatrix::build(&g1, &g2, &AffinityConfig::default()).unwrap();
        assert!(k.swapped());
        assert_eq!((k.n1(), k.n2()), (1, 2));
        assert_eq!(k.diag(), &[0.0, 1.0]);
    }

    #[test]
    fn build_errors() {
        let g1 = graph(&[0], &[[0.0; 3]], &[vec![1.0, 0.0]]);
        let g2 = graph(&[0], &[[0.0; 3]], &[vec![1.0, 0.0, 0.0]]);
        assert_eq!(
            AffinityMatrix::build(&g1, &g2, &AffinityConfig::default()),
            Err(AffinityError::DimMismatch(2, 3))
        );
        let cfg = AffinityConfig { edge_sigma: 0.0, ..Default::default() };
        assert!(matches!(AffinityMatrix::build(&g1, &g1, &cfg), Err(AffinityError::InvalidConfig(_))));
    }

    #[test]
    fn from_parts_mirrors_entries() {
        let k = AffinityMatrix::from_parts(2, 2, vec![0.1; 4], &[((0, 0), (1, 1), 0.7)]).unwrap();
        assert_eq!(k.get(0, 3), 0.7);
        assert_eq!(k.get(3, 0), 0.7);
        assert_eq!(k.offdiag_nnz(), 2);
        assert!((k.objective(&[0, 1]) - 1.6).abs() < 1e-15);
        assert!((k.objective(&[1, 0]) - 0.2).abs() < 1e-15);
        assert!(AffinityMatrix::from_parts(2, 2, vec![0.1; 4], &[((0, 0), (0, 1), 0.7)]).is_err());
    }
}
