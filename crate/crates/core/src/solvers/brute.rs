use super::{HardMatch, SolverError};
use crate::affinity::AffinityMatrix;

/// Upper bound on the number of injective assignments enumerated.
pub const MAX_BRUTE_FORCE_ASSIGNMENTS: f64 = 1e7;

pub(crate) fn assignment_count(n1: usize, n2: usize) -> f64 {
    ((n2 - n1 + 1)..=n2).map(|x| x as f64).product()
}

/// Exact QAP optimum by enumerating every injective assignment.
pub fn brute_force(k: &AffinityMatrix) -> Result<HardMatch, SolverError> {
    let (n1, n2) = (k.n1(), k.n2());
    let count = assignment_count(n1, n2);
    if count > MAX_BRUTE_FORCE_ASSIGNMENTS {
        return Err(SolverError::TooLarge(count));
    }
    let mut search = Search {
        k,
        used: vec![false; n2],
        current: Vec::with_capacity(n1),
        best: f64::NEG_INFINITY,
        near: Vec::new(),
        eps: near_tie_eps(k),
    };
    search.descend(0.0);
    Ok(pick_canonical(k, search.near.into_iter().map(|c| c.1)))
}

/// Width of the band of incremental values treated as possible ties.
pub(crate) fn near_tie_eps(k: &AffinityMatrix) -> f64 {
    let n1 = k.n1() as f64;
    1e-9 * k.diag().iter().fold(1.0, |acc: f64, v| acc.max(*v)) * n1 * n1
}

/// Among candidate assignments, the one with the largest objective as
/// computed by [`AffinityMatrix::objective`]; exact ties go to the
/// lexicographically smallest assignment.
pub(crate) fn pick_canonical(k: &AffinityMatrix, candidates: impl IntoIterator<Item = Vec<usize>>) -> HardMatch {
    let mut best: Option<HardMatch> = None;
    for assignment in candidates {
        let objective = k.objective(&assignment);
        let better = match &best {
            None => true,
            Some(b) => objective > b.objective || (objective == b.objective && assignment < b.assignment),
        };
        if better {
            best = Some(HardMatch { assignment, objective });
        }
    }
    best.expect("at least one candidate")
}

struct Search<'a> {
    k: &'a AffinityMatrix,
    used: Vec<bool>,
    current: Vec<usize>,
    best: f64,
    near: Vec<(f64, Vec<usize>)>,
    eps: f64,
}

impl Search<'_> {
    fn descend(&mut self, value: f64) {
        let i = self.current.len();
        if i == self.k.n1() {
            if value > self.best {
                self.best = value;
                let floor = value - self.eps;
                self.near.retain(|c| c.0 >= floor);
            }
            if value >= self.best - self.eps {
                self.near.push((value, self.current.clone()));
            }
            return;
        }
        for a in 0..self.k.n2() {
            if self.used[a] {
                continue;
            }
            let gain = pair_gain(self.k, &self.current, i, a);
            self.used[a] = true;
            self.current.push(a);
            self.descend(value + gain);
            self.current.pop();
            self.used[a] = false;
        }
    }
}

/// Objective gained by adding `i -> a` to an assignment of rows `0..i`:
/// the node term plus both orientations of every pairwise term.
pub(crate) fn pair_gain(k: &AffinityMatrix, prefix: &[usize], i: usize, a: usize) -> f64 {
    let n1 = k.n1();
    let p = k.index(i, a);
    let mut gain = k.diag()[p];
    let (cols, vals) = k.row(p);
    for (&q, &v) in cols.iter().zip(vals) {
        let q = q as usize;
        let (j, b) = (q % n1, q / n1);
        if j < prefix.len() && prefix[j] == b {
            gain += 2.0 * v;
        }
    }
    gain
}
