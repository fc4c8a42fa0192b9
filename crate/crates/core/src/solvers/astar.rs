//! Best-first search over partial assignments of graph-1 nodes, taken in id
//! order.
//!
//! A state fixes the first `k` rows. Its value is the objective collected by
//! those rows; its bound adds an optimistic estimate for the rest, computed
//! as a maximum-weight assignment of the remaining rows to the unused
//! columns where each cell carries
//!
//! * the node affinity,
//! * both orientations of every pairwise term with an already-fixed row,
//! * for every pair of still-free rows `(i, j)`, the best edge affinity row
//!   `i` could see towards `j`. Each endpoint takes one orientation.
//!
//! The bound never undershoots, so with an unlimited beam the first complete
//! state popped is a global optimum. The search then keeps popping states
//! whose bound is within rounding distance of it and returns the best of
//! those complete assignments under the canonical objective.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::brute::{near_tie_eps, pair_gain, pick_canonical};
use super::hungarian::max_weight_value;
use super::{HardMatch, SolverError, SolverParams};
use crate::affinity::{AffinityConfig, AffinityMatrix};
use crate::graph::ObjectGraph;

pub fn solve_astar(
    g1: &ObjectGraph,
    g2: &ObjectGraph,
    cfg: &AffinityConfig,
    p: &SolverParams,
) -> Result<HardMatch, SolverError> {
    if g1.len() > g2.len() {
        return Err(SolverError::SizeOrder(g1.len(), g2.len()));
    }
    let k = AffinityMatrix::build(g1, g2, cfg)?;
    solve_astar_matrix(&k, p)
}

/// For every row `(i, a)` of `K`: `(j, max_b K[(i,a),(j,b)])` over the rows `j`
/// it has pairwise terms with.
struct PairBounds {
    per_row: Vec<Vec<(u32, f64)>>,
}

impl PairBounds {
    fn new(k: &AffinityMatrix) -> Self {
        let n1 = k.n1();
        let mut scratch = vec![f64::NEG_INFINITY; n1];
        let mut touched = Vec::new();
        let per_row = (0..k.size())
            .map(|p| {
                let (cols, vals) = k.row(p);
                for (&q, &v) in cols.iter().zip(vals) {
                    let j = q as usize % n1;
                    if scratch[j] == f64::NEG_INFINITY {
                        touched.push(j);
                    }
                    scratch[j] = scratch[j].max(v);
                }
                touched.sort_unstable();
                let out = touched.iter().map(|&j| (j as u32, scratch[j])).collect();
                for &j in &touched {
                    scratch[j] = f64::NEG_INFINITY;
                }
                touched.clear();
                out
            })
            .collect();
        PairBounds { per_row }
    }
}

fn bound(k: &AffinityMatrix, pb: &PairBounds, prefix: &[usize], used: &[bool]) -> f64 {
    let r0 = prefix.len();
    let rows = k.n1() - r0;
    if rows == 0 {
        return 0.0;
    }
    let cols: Vec<usize> = (0..k.n2()).filter(|&a| !used[a]).collect();
    let mut w = vec![0.0; rows * cols.len()];
    for li in 0..rows {
        let i = r0 + li;
        for (lc, &a) in cols.iter().enumerate() {
            let mut cell = pair_gain(k, prefix, i, a);
            for &(j, m) in &pb.per_row[k.index(i, a)] {
                if j as usize >= r0 {
                    cell += m;
                }
            }
            w[li * cols.len() + lc] = cell;
        }
    }
    max_weight_value(rows, cols.len(), |i, c| w[i * cols.len() + c])
}

/// Optimistic estimate of the objective still obtainable after fixing `prefix`.
pub fn astar_heuristic(k: &AffinityMatrix, prefix: &[usize]) -> f64 {
    let pb = PairBounds::new(k);
    let mut used = vec![false; k.n2()];
    for &a in prefix {
        used[a] = true;
    }
    bound(k, &pb, prefix, &used)
}

struct State {
    prefix: Vec<usize>,
    value: f64,
    priority: f64,
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for State {}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for State {
    // max-heap: higher bound first, then deeper, then lexicographically smaller
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then(self.prefix.len().cmp(&other.prefix.len()))
            .then_with(|| other.prefix.cmp(&self.prefix))
    }
}

pub fn solve_astar_matrix(k: &AffinityMatrix, p: &SolverParams) -> Result<HardMatch, SolverError> {
    p.validate()?;
    let start = Instant::now();
    let (n1, n2) = (k.n1(), k.n2());
    if n1 > n2 {
        return Err(SolverError::SizeOrder(n1, n2));
    }
    let pb = PairBounds::new(k);
    let mut used = vec![false; n2];
    let root_bound = bound(k, &pb, &[], &used);
    let mut open = BinaryHeap::new();
    open.push(State { prefix: Vec::new(), value: 0.0, priority: root_bound });

    let eps = near_tie_eps(k);
    let mut floor = f64::NEG_INFINITY;
    let mut complete = Vec::new();
    while let Some(state) = open.pop() {
        if state.priority < floor {
            break;
        }
        if state.prefix.len() == n1 {
            if complete.is_empty() {
                floor = state.value - eps;
            }
            complete.push(state.prefix);
            continue;
        }
        let i = state.prefix.len();
        used.iter_mut().for_each(|u| *u = false);
        for &a in &state.prefix {
            used[a] = true;
        }
        let mut children = Vec::new();
        for a in 0..n2 {
            if used[a] {
                continue;
            }
            let elapsed = start.elapsed().as_secs_f64();
            if elapsed > p.timeout_s {
                return Err(SolverError::BudgetExhausted(elapsed));
            }
            let value = state.value + pair_gain(k, &state.prefix, i, a);
            let mut prefix = state.prefix.clone();
            prefix.push(a);
            used[a] = true;
            let h = bound(k, &pb, &prefix, &used);
            used[a] = false;
            children.push(State { prefix, value, priority: value + h });
        }
        if p.astar_beam > 0 && children.len() > p.astar_beam {
            children.sort_by(|x, y| y.cmp(x));
            children.truncate(p.astar_beam);
        }
        open.extend(children);
    }
    Ok(pick_canonical(k, complete))
}
