//! Rectangular linear assignment (rows ≤ columns) by the Hungarian method
//! with potentials, O(rows² · cols).

use super::{HardMatch, SoftMatch};

/// Result of a minimum-cost solve: assignment plus optimal dual potentials.
struct Solved {
    assignment: Vec<usize>,
    cost: f64,
    u: Vec<f64>,
    v: Vec<f64>,
}

/// Minimum-cost assignment of every row to a distinct column. Unmatched
/// columns keep a zero potential, so `(u, v)` is dual-optimal for the
/// "each column at most once" problem.
fn solve_min(rows: usize, cols: usize, cost: impl Fn(usize, usize) -> f64) -> Solved {
    debug_assert!(rows <= cols);
    if rows == 0 {
        return Solved { assignment: Vec::new(), cost: 0.0, u: Vec::new(), v: vec![0.0; cols] };
    }
    let inf = f64::INFINITY;
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    // p[j]: row (1-based) matched to column j, 0 if free
    let mut p = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    let mut minv = vec![inf; cols + 1];
    let mut used = vec![false; cols + 1];

    for i in 1..=rows {
        p[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = inf);
        used.iter_mut().for_each(|m| *m = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; rows];
    for j in 1..=cols {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    let total = assignment.iter().enumerate().map(|(i, &j)| cost(i, j)).sum();
    Solved { assignment, cost: total, u: u[1..].to_vec(), v: v[1..].to_vec() }
}

/// Value of the maximum-weight injective assignment of rows to columns.
pub fn max_weight_value(rows: usize, cols: usize, weight: impl Fn(usize, usize) -> f64) -> f64 {
    -solve_min(rows, cols, |i, j| -weight(i, j)).cost
}

/// Maximum-weight injective assignment of all rows (`rows ≤ cols`), choosing
/// the lexicographically smallest assignment among optima.
pub fn max_weight_assignment(rows: usize, cols: usize, weight: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    assert!(rows <= cols, "more rows than columns");
    let cost = |i: usize, j: usize| -weight(i, j);
    let scale = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| (i, j)))
        .map(|(i, j)| weight(i, j).abs())
        .fold(1.0, f64::max);
    let eps = 1e-11 * scale * (rows.max(1) as f64);

    let mut avail: Vec<usize> = (0..cols).collect();
    let mut result = Vec::with_capacity(rows);
    let mut sub = solve_min(rows, cols, cost);

    // Walk rows in order. `sub` is optimal for rows r.. over `avail` and its
    // duals certify which columns any optimum may use for row r.
    for r in 0..rows {
        let local_rows = rows - r;
        let cur = sub.assignment[0];
        let mut chosen = cur;
        let mut next: Option<Solved> = None;
        for c in 0..cur {
            let reduced = cost(r, avail[c]) - sub.u[0] - sub.v[c];
            if reduced > eps {
                continue;
            }
            let rest_cols: Vec<usize> = avail.iter().enumerate().filter(|&(k, _)| k != c).map(|(_, &x)| x).collect();
            let rest = solve_min(local_rows - 1, rest_cols.len(), |i, j| cost(r + 1 + i, rest_cols[j]));
            if cost(r, avail[c]) + rest.cost <= sub.cost + eps {
                chosen = c;
                next = Some(rest);
                break;
            }
        }
        result.push(avail[chosen]);
        let rest = match next {
            Some(rest) => rest,
            None => {
                // drop row r and column `cur` from the current optimum and its duals
                let assignment = sub.assignment[1..].iter().map(|&j| if j > cur { j - 1 } else { j }).collect();
                let mut v = sub.v.clone();
                v.remove(cur);
                Solved {
                    assignment,
                    cost: sub.cost - cost(r, avail[cur]),
                    u: sub.u[1..].to_vec(),
                    v,
                }
            }
        };
        avail.remove(chosen);
        sub = rest;
    }
    result
}

/// Rounds a soft match to the maximum-score hard match; the objective is
/// the summed score and is replaced with `vec(X)ᵀ K vec(X)` by callers that hold `K`.
pub fn hungarian_round(s: &SoftMatch) -> HardMatch {
    let assignment = max_weight_assignment(s.n1, s.n2, |i, a| s.get(i, a));
    let objective = assignment.iter().enumerate().map(|(i, &a)| s.get(i, a)).sum();
    HardMatch { assignment, objective }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soft(n1: usize, n2: usize, scores: &[f64]) -> SoftMatch {
        SoftMatch::new(n1, n2, scores.to_vec()).unwrap()
    }

    #[test]
    fn dominant_diagonal() {
        let h = hungarian_round(&soft(2, 2, &[0.9, 0.1, 0.2, 0.8]));
        assert_eq!(h.assignment, vec![0, 1]);
        assert!((h.objective - 1.7).abs() < 1e-12);
    }

    #[test]
    fn rectangular_row() {
        assert_eq!(hungarian_round(&soft(1, 2, &[0.1, 0.9])).assignment, vec![1]);
    }

    #[test]
    fn ties_pick_lexicographically_smallest() {
        assert_eq!(hungarian_round(&soft(2, 2, &[0.5; 4])).assignment, vec![0, 1]);
        assert_eq!(hungarian_round(&soft(2, 4, &[1.0; 8])).assignment, vec![0, 1]);
        // both {0->1, 1->0} and {0->0, 1->2} score 2
        let s = soft(2, 3, &[1.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(hungarian_round(&s).assignment, vec![0, 2]);
    }

    fn brute(n1: usize, n2: usize, w: &[f64]) -> (f64, Vec<usize>) {
        fn rec(i: usize, n1: usize, n2: usize, w: &[f64], cur: &mut Vec<usize>, best: &mut (f64, Vec<usize>)) {
            if i == n1 {
                let val: f64 = cur.iter().enumerate().map(|(r, &c)| w[r * n2 + c]).sum();
                if val > best.0 + 1e-12 {
                    *best = (val, cur.clone());
                }
                return;
            }
            for c in 0..n2 {
                if !cur.contains(&c) {
                    cur.push(c);
                    rec(i + 1, n1, n2, w, cur, best);
                    cur.pop();
                }
            }
        }
        let mut best = (f64::NEG_INFINITY, Vec::new());
        rec(0, n1, n2, w, &mut Vec::new(), &mut best);
        best
    }

    #[test]
    fn matches_enumeration_on_small_integer_grids() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let n1 = rng.random_range(1..=4);
            let n2 = rng.random_range(n1..=5);
            // few distinct values so ties are common
            let w: Vec<f64> = (0..n1 * n2).map(|_| rng.random_range(0..3) as f64).collect();
            let (best, lex) = brute(n1, n2, &w);
            let got = max_weight_assignment(n1, n2, |i, j| w[i * n2 + j]);
            let val: f64 = got.iter().enumerate().map(|(r, &c)| w[r * n2 + c]).sum();
            assert!((val - best).abs() < 1e-9, "{w:?}");
            assert_eq!(got, lex, "{w:?}");
            assert!((max_weight_value(n1, n2, |i, j| w[i * n2 + j]) - best).abs() < 1e-9);
        }
    }
}
