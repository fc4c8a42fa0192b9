//! Object graphs: mapped objects as nodes, Euclidean distances as edges.
//!
//! Edges join every pair of objects closer than a threshold. When that leaves
//! the graph in several pieces, the shortest inter-component links of the
//! Euclidean minimum spanning tree are added until it is connected.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::SCHEMA;

pub type NodeId = u64;

/// Underwater-scale edge threshold in meters.
pub const UNDERWATER_EDGE_THRESHOLD_M: f64 = 2.0;
/// Vehicle-scale edge threshold in meters.
pub const VEHICLE_EDGE_THRESHOLD_M: f64 = 100.0;
/// Default embedding dimension.
pub const DEFAULT_EMBEDDING_DIM: usize = 384;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("empty graph")]
    EmptyGraph,
    #[error("edge threshold must be positive and finite, got {0}")]
    InvalidThreshold(f64),
    #[error("duplicate node id {0}")]
    DuplicateId(NodeId),
    #[error("unknown node ids: {0:?}")]
    UnknownIds(Vec<NodeId>),
    #[error("node {id}: embedding has dimension {got}, expected {expected}")]
    DimMismatch { id: NodeId, expected: usize, got: usize },
    #[error("node {0}: embedding has zero norm")]
    ZeroEmbedding(NodeId),
    #[error("node {0}: variance entries and uncertainty must be finite and non-negative")]
    InvalidVariance(NodeId),
    #[error("node {0}: non-finite value")]
    NonFinite(NodeId),
    #[error("node {id}: position must have 2 or 3 coordinates, got {got}")]
    BadPosition { id: NodeId, got: usize },
    #[error("node {0}: obs_count must be positive")]
    ZeroObsCount(NodeId),
    #[error("unsupported schema {0:?}")]
    Schema(String),
    #[error("map file: {0}")]
    Io(String),
}

/// A mapped object.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectNode {
    pub id: NodeId,
    pub position: [f64; 3],
    pub embedding_mean: Vec<f64>,
    /// Diagonal of the embedding covariance.
    pub embedding_var: Vec<f64>,
    pub scalar_uncertainty: f64,
    pub obs_count: u32,
    pub last_seen: f64,
}

impl ObjectNode {
    /// A node seen once, with an isotropic embedding variance of `uncertainty² + 1e-6`.
    pub fn new(id: NodeId, position: [f64; 3], embedding: Vec<f64>, uncertainty: f64) -> Self {
        let var = crate::uncertainty::scalar_to_variance(uncertainty, embedding.len());
        ObjectNode {
            id,
            position,
            embedding_mean: embedding,
            embedding_var: var,
            scalar_uncertainty: uncertainty,
            obs_count: 1,
            last_seen: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.embedding_mean.len()
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.embedding_var.len() != self.embedding_mean.len() {
            return Err(GraphError::DimMismatch {
                id: self.id,
                expected: self.embedding_mean.len(),
                got: self.embedding_var.len(),
            });
        }
        if self.position.iter().any(|v| !v.is_finite())
            || self.embedding_mean.iter().any(|v| !v.is_finite())
            || !self.last_seen.is_finite()
        {
            return Err(GraphError::NonFinite(self.id));
        }
        if self.embedding_var.iter().any(|v| !v.is_finite() || *v < 0.0)
            || !self.scalar_uncertainty.is_finite()
            || self.scalar_uncertainty < 0.0
        {
            return Err(GraphError::InvalidVariance(self.id));
        }
        if self.embedding_mean.iter().all(|v| *v == 0.0) {
            return Err(GraphError::ZeroEmbedding(self.id));
        }
        if self.obs_count == 0 {
            return Err(GraphError::ZeroObsCount(self.id));
        }
        Ok(())
    }

    pub fn distance_to(&self, other: &ObjectNode) -> f64 {
        distance(&self.position, &other.position)
    }
}

pub fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Undirected edge between two node ids, stored with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub i: NodeId,
    pub j: NodeId,
    pub length: f64,
}

/// Threshold edges plus minimum-spanning-tree links joining any leftover components.
///
/// Output is sorted by `(i, j)` and depends only on the node set, not its order.
pub fn build_edges(nodes: &[ObjectNode], threshold: f64) -> Result<Vec<GraphEdge>, GraphError> {
    if nodes.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(GraphError::InvalidThreshold(threshold));
    }
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by_key(|&k| nodes[k].id);
    let sorted: Vec<&ObjectNode> = order.iter().map(|&k| &nodes[k]).collect();
    let n = sorted.len();

    let mut uf = UnionFind::new(n);
    let mut picked: Vec<(usize, usize, f64)> = Vec::new();
    let mut rest: Vec<(usize, usize, f64)> = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            let d = sorted[a].distance_to(sorted[b]);
            if d < threshold {
                uf.union(a, b);
                picked.push((a, b, d));
            } else {
                rest.push((a, b, d));
            }
        }
    }
    if uf.components > 1 {
        rest.sort_by(|x, y| x.2.total_cmp(&y.2).then(x.0.cmp(&y.0)).then(x.1.cmp(&y.1)));
        for (a, b, d) in rest {
            if uf.union(a, b) {
                picked.push((a, b, d));
                if uf.components == 1 {
                    break;
                }
            }
        }
    }
    picked.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(&y.1)));
    Ok(picked
        .into_iter()
        .map(|(a, b, length)| GraphEdge { i: sorted[a].id, j: sorted[b].id, length })
        .collect())
}

struct UnionFind {
    parent: Vec<usize>,
    components: usize,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), components: n }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        // smaller root wins so results do not depend on call order
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        self.components -= 1;
        true
    }
}

/// A local map: nodes sorted by id plus derived edges.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectGraph {
    nodes: Vec<ObjectNode>,
    edges: Vec<GraphEdge>,
    frame_id: String,
    edge_threshold: f64,
}

impl ObjectGraph {
    pub fn new(
        frame_id: impl Into<String>,
        mut nodes: Vec<ObjectNode>,
        edge_threshold: f64,
    ) -> Result<Self, GraphError> {
        if nodes.is_empty() {
            return Err(GraphError::EmptyGraph);
        }
        nodes.sort_by_key(|n| n.id);
        for w in nodes.windows(2) {
            if w[0].id == w[1].id {
                return Err(GraphError::DuplicateId(w[0].id));
            }
        }
        let dim = nodes[0].dim();
        for n in &nodes {
            n.validate()?;
            if n.dim() != dim {
                return Err(GraphError::DimMismatch { id: n.id, expected: dim, got: n.dim() });
            }
        }
        let edges = build_edges(&nodes, edge_threshold)?;
        Ok(ObjectGraph { nodes, edges, frame_id: frame_id.into(), edge_threshold })
    }

    pub fn nodes(&self) -> &[ObjectNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn frame_id(&self) -> &str {
        &self.frame_id
    }

    pub fn edge_threshold(&self) -> f64 {
        self.edge_threshold
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].dim()
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok()
    }

    pub fn node(&self, id: NodeId) -> Option<&ObjectNode> {
        self.index_of(id).map(|k| &self.nodes[k])
    }

    /// Edges as index pairs `(i, j, length)` with `i < j`.
    pub fn index_edges(&self) -> Vec<(usize, usize, f64)> {
        self.edges
            .iter()
            .map(|e| (self.index_of(e.i).unwrap(), self.index_of(e.j).unwrap(), e.length))
            .collect()
    }

    /// Per-node neighbor lists over node indices, sorted by neighbor index.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (i, j, len) in self.index_edges() {
            adj[i].push((j, len));
            adj[j].push((i, len));
        }
        for list in &mut adj {
            list.sort_by_key(|x| x.0);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.adjacency();
        let mut seen = vec![false; adj.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == adj.len()
    }

    /// Induced subgraph on `ids`, with edges rebuilt at this graph's threshold.
    pub fn subgraph(&self, ids: &[NodeId]) -> Result<ObjectGraph, GraphError> {
        let mut seen = HashSet::new();
        let mut missing = Vec::new();
        let mut nodes = Vec::with_capacity(ids.len());
        for &id in ids {
            if !seen.insert(id) {
                return Err(GraphError::DuplicateId(id));
            }
            match self.node(id) {
                Some(n) => nodes.push(n.clone()),
                None => missing.push(id),
            }
        }
        if !missing.is_empty() {
            return Err(GraphError::UnknownIds(missing));
        }
        ObjectGraph::new(self.frame_id.clone(), nodes, self.edge_threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub position: Vec<f64>,
    pub embedding: Vec<f64>,
    pub variance: Vec<f64>,
    pub uncertainty: f64,
    pub obs_count: u32,
    pub last_seen: f64,
}

/// On-disk map format. Edges are derived on load, never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapFile {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub frame_id: String,
    pub dim: usize,
    pub nodes: Vec<NodeRecord>,
    pub edge_threshold_m: f64,
}

fn default_schema() -> String {
    SCHEMA.to_string()
}

impl MapFile {
    pub fn from_graph(g: &ObjectGraph) -> Self {
        MapFile {
            schema: SCHEMA.to_string(),
            frame_id: g.frame_id.clone(),
            dim: g.dim(),
            nodes: g
                .nodes
                .iter()
                .map(|n| NodeRecord {
                    id: n.id,
                    position: n.position.to_vec(),
                    embedding: n.embedding_mean.clone(),
                    variance: n.embedding_var.clone(),
                    uncertainty: n.scalar_uncertainty,
                    obs_count: n.obs_count,
                    last_seen: n.last_seen,
                })
                .collect(),
            edge_threshold_m: g.edge_threshold,
        }
    }

    pub fn to_graph(&self) -> Result<ObjectGraph, GraphError> {
        if self.schema != SCHEMA {
            return Err(GraphError::Schema(self.schema.clone()));
        }
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for r in &self.nodes {
            let position = match r.position.as_slice() {
                [x, y] => [*x, *y, 0.0],
                [x, y, z] => [*x, *y, *z],
                other => return Err(GraphError::BadPosition { id: r.id, got: other.len() }),
            };
            if r.embedding.len() != self.dim {
                return Err(GraphError::DimMismatch {
                    id: r.id,
                    expected: self.dim,
                    got: r.embedding.len(),
                });
            }
            nodes.push(ObjectNode {
                id: r.id,
                position,
                embedding_mean: r.embedding.clone(),
                embedding_var: r.variance.clone(),
                scalar_uncertainty: r.uncertainty,
                obs_count: r.obs_count,
                last_seen: r.last_seen,
            });
        }
        ObjectGraph::new(self.frame_id.clone(), nodes, self.edge_threshold_m)
    }

    pub fn read(path: &std::path::Path) -> Result<ObjectGraph, GraphError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))?;
        let file: MapFile = serde_json::from_str(&text)
            .map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))?;
        file.to_graph()
    }

    pub fn write(g: &ObjectGraph, path: &std::path::Path) -> Result<(), GraphError> {
        let text = serde_json::to_string_pretty(&MapFile::from_graph(g))
            .map_err(|e| GraphError::Io(e.to_string()))?;
        std::fs::write(path, text + "\n")
            .map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: NodeId, p: [f64; 3]) -> ObjectNode {
        ObjectNode::new(id, p, vec![1.0, 0.0], 0.1)
    }

    fn square() -> Vec<ObjectNode> {
        vec![
            node(0, [0.0, 0.0, 0.0]),
            node(1, [1.0, 0.0, 0.0]),
            node(2, [1.0, 1.0, 0.0]),
            node(3, [0.0, 1.0, 0.0]),
        ]
    }

    #[test]
    fn close_pair_gets_threshold_edge() {
        let e = build_edges(&[node(0, [0.0; 3]), node(1, [1.0, 0.0, 0.0])], 2.0).unwrap();
        assert_eq!(e, vec![GraphEdge { i: 0, j: 1, length: 1.0 }]);
    }

    #[test]
    fn far_pair_gets_spanning_edge() {
        let e = build_edges(&[node(0, [0.0; 3]), node(1, [5.0, 0.0, 0.0])], 2.0).unwrap();
        assert_eq!(e, vec![GraphEdge { i: 0, j: 1, length: 5.0 }]);
    }

    #[test]
    fn unit_square_threshold_1_5() {
        // sides 1.0 and diagonals sqrt(2) ~ 1.414 are all under 1.5
        let e = build_edges(&square(), 1.5).unwrap();
        assert_eq!(e.len(), 6);
        let diag = e.iter().filter(|e| (e.length - 2f64.sqrt()).abs() < 1e-12).count();
        assert_eq!(diag, 2);
        // at 1.2 only the perimeter survives
        let e = build_edges(&square(), 1.2).unwrap();
        assert_eq!(e.len(), 4);
        assert!(e.iter().all(|e| (e.length - 1.0).abs() < 1e-12));
    }

    #[test]
    fn empty_node_list_is_rejected() {
        assert_eq!(build_edges(&[], 2.0), Err(GraphError::EmptyGraph));
        assert!(matches!(build_edges(&square(), 0.0), Err(GraphError::InvalidThreshold(_))));
    }

    #[test]
    fn edges_ignore_input_order() {
        let mut rev = square();
        rev.reverse();
        assert_eq!(build_edges(&rev, 1.2).unwrap(), build_edges(&square(), 1.2).unwrap());
    }

    #[test]
    fn two_clusters_joined_by_shortest_link() {
        let nodes = vec![
            node(0, [0.0; 3]),
            node(1, [1.0, 0.0, 0.0]),
            node(2, [10.0, 0.0, 0.0]),
            node(3, [11.0, 0.0, 0.0]),
        ];
        let e = build_edges(&nodes, 2.0).unwrap();
        assert_eq!(e.len(), 3);
        assert!(e.contains(&GraphEdge { i: 1, j: 2, length: 9.0 }));
    }

    #[test]
    fn subgraph_cases() {
        let g = ObjectGraph::new("m", square(), 1.5).unwrap();
        let all = g.subgraph(&[0, 1, 2, 3]).unwrap();
        assert_eq!(all, g);

        let one = g.subgraph(&[2]).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one.edges().is_empty());

        let corners = g.subgraph(&[0, 2]).unwrap();
        assert_eq!(corners.edges().len(), 1);
        assert!((corners.edges()[0].length - 2f64.sqrt()).abs() < 1e-12);

        assert_eq!(g.subgraph(&[0, 7, 9]), Err(GraphError::UnknownIds(vec![7, 9])));
    }

    #[test]
    fn node_validation() {
        let mut n = node(4, [0.0; 3]);
        n.embedding_mean = vec![0.0, 0.0];
        assert_eq!(n.validate(), Err(GraphError::ZeroEmbedding(4)));
        let mut n = node(5, [0.0; 3]);
        n.embedding_var = vec![0.1];
        assert!(matches!(n.validate(), Err(GraphError::DimMismatch { .. })));
        let mut n = node(6, [0.0; 3]);
        n.embedding_var[0] = -1.0;
        assert_eq!(n.validate(), Err(GraphError::InvalidVariance(6)));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let nodes = vec![node(1, [0.0; 3]), node(1, [1.0, 0.0, 0.0])];
        assert_eq!(ObjectGraph::new("m", nodes, 2.0), Err(GraphError::DuplicateId(1)));
    }

    #[test]
    fn map_file_lifts_planar_positions() {
        let text = r#"{"frame_id":"f","dim":2,"edge_threshold_m":2.0,"nodes":[
            {"id":3,"position":[1.0,2.0],"embedding":[1.0,0.0],"variance":[0.1,0.1],
             "uncertainty":0.2,"obs_count":1,"last_seen":0.0}]}"#;
        let file: MapFile = serde_json::from_str(text).unwrap();
        let g = file.to_graph().unwrap();
        assert_eq!(g.nodes()[0].position, [1.0, 2.0, 0.0]);
        let back = MapFile::from_graph(&g);
        assert_eq!(back.schema, SCHEMA);
        assert_eq!(back.to_graph().unwrap(), g);
    }
}
