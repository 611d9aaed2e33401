//! Exact Kantorovich W1 between equal-size uniform empirical measures.
//!
//! For uniform weights the transport problem reduces to min-cost perfect
//! matching, solved here by shortest augmenting paths with dual potentials on
//! a dense cost matrix (column-reduction warm start, then one Dijkstra-style
//! augmentation per remaining free row). A factorial brute-force oracle and
//! the sorted one-dimensional representation are provided for cross-checks.

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::torus::{euclidean_distance_slice, torus_distance_slice, Frame};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Ground metric for the matching cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    Torus,
}

/// Dense matrices above this size would need more than 512 MB.
pub const MAX_DENSE_N: usize = 8192;
/// Factorial enumeration cap for the brute-force oracle.
pub const MAX_BRUTE_N: usize = 9;

/// Result of an exact matching solve.
///
/// `value` is the average matched distance `(1/n) * sum dist(x_k, y_sigma(k))`;
/// `permutation` is the optimal assignment (only the value is contractual,
/// ties may be broken either way).
#[derive(Debug, Clone)]
pub struct MatchingResult {
    pub value: f64,
    pub permutation: Vec<usize>,
    pub metric: Metric,
    pub frame: Frame,
}

fn validate_pair(mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: Metric) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch(mu.dim(), nu.dim()));
    }
    if mu.frame() != nu.frame() {
        return Err(Error::FrameMismatch {
            expected: mu.frame(),
            got: nu.frame(),
        });
    }
    if mu.n() != nu.n() {
        return Err(Error::SizeMismatch(mu.n(), nu.n()));
    }
    if metric == Metric::Torus && !mu.frame().is_torus_valued() {
        return Err(Error::FrameMismatch {
            expected: Frame::FullTorus,
            got: mu.frame(),
        });
    }
    Ok(())
}

#[inline]
fn dist(metric: Metric, a: &[f64], b: &[f64]) -> f64 {
    match metric {
        Metric::Euclidean => euclidean_distance_slice(a, b),
        Metric::Torus => torus_distance_slice(a, b),
    }
}

/// Row-major n x n cost matrix. Rows are filled independently, so the result
/// is bit-stable regardless of worker count.
pub(crate) fn cost_matrix(mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: Metric) -> Vec<f64> {
    let n = mu.n();
    let mut cost = vec![0.0f64; n * n];
    let fill_row = |(i, row): (usize, &mut [f64])| {
        let xi = mu.point(i);
        for (j, c) in row.iter_mut().enumerate() {
            *c = dist(metric, xi, nu.point(j));
        }
    };
    #[cfg(feature = "parallel")]
    cost.par_chunks_mut(n).enumerate().for_each(fill_row);
    #[cfg(not(feature = "parallel"))]
    cost.chunks_mut(n).enumerate().for_each(fill_row);
    cost
}

const UNASSIGNED: usize = usize::MAX;

/// Exact dense assignment: returns `sigma` with row `i` matched to column
/// `sigma[i]`, minimizing the total cost.
fn solve_assignment(cost: &[f64], n: usize) -> Vec<usize> {
    debug_assert_eq!(cost.len(), n * n);
    let mut u = vec![0.0f64; n]; // row potentials
    let mut v = vec![0.0f64; n + 1]; // column potentials, last = virtual root
    let mut row_of = vec![UNASSIGNED; n + 1];

    // Column reduction: v[j] = column minimum, greedily matching each column
    // to its argmin row where still free. Matched pairs are tight, so the
    // augmenting phase below starts from a dual-feasible partial solution.
    let mut argmin_row = vec![0usize; n];
    for j in 0..n {
        let mut best = f64::INFINITY;
        let mut best_i = 0;
        for i in 0..n {
            let c = cost[i * n + j];
            if c < best {
                best = c;
                best_i = i;
            }
        }
        v[j] = best;
        argmin_row[j] = best_i;
    }
    let mut col_of = vec![UNASSIGNED; n];
    for j in (0..n).rev() {
        let i = argmin_row[j];
        if col_of[i] == UNASSIGNED {
            col_of[i] = j;
            row_of[j] = i;
        }
    }

    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];
    let mut way = vec![0usize; n + 1];

    for start_row in 0..n {
        if col_of[start_row] != UNASSIGNED {
            continue;
        }
        minv.fill(f64::INFINITY);
        used.fill(false);
        row_of[n] = start_row;
        let mut j0 = n;
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let base = i0 * n;
            let u0 = u[i0];
            let mut delta = f64::INFINITY;
            let mut j1 = UNASSIGNED;
            for j in 0..n {
                if !used[j] {
                    let cur = cost[base + j] - u0 - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            debug_assert!(delta.is_finite());
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == UNASSIGNED {
                break;
            }
        }
        // Flip matched edges along the alternating path back to the root.
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == n {
                break;
            }
        }
        for j in 0..n {
            if row_of[j] != UNASSIGNED {
                col_of[row_of[j]] = j;
            }
        }
    }

    col_of
}

fn matched_value(cost: &[f64], n: usize, sigma: &[usize]) -> f64 {
    let total: f64 = sigma
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .sum();
    total / n as f64
}

/// Exact W1 via the assignment solver. Globally optimal up to cost-matrix
/// floating-point resolution; O(n^3) worst case, `n <= 8192`.
pub fn w1_exact(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    metric: Metric,
) -> Result<MatchingResult> {
    validate_pair(mu, nu, metric)?;
    let n = mu.n();
    if n > MAX_DENSE_N {
        return Err(Error::TooLarge {
            n,
            limit: MAX_DENSE_N,
        });
    }
    let cost = cost_matrix(mu, nu, metric);
    let sigma = solve_assignment(&cost, n);
    Ok(MatchingResult {
        value: matched_value(&cost, n, &sigma),
        permutation: sigma,
        metric,
        frame: mu.frame(),
    })
}

/// Exact minimum by enumerating all n! permutations (test oracle, `n <= 9`).
pub fn w1_bruteforce(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    metric: Metric,
) -> Result<MatchingResult> {
    validate_pair(mu, nu, metric)?;
    let n = mu.n();
    if n > MAX_BRUTE_N {
        return Err(Error::TooLarge {
            n,
            limit: MAX_BRUTE_N,
        });
    }
    let cost = cost_matrix(mu, nu, metric);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_total = total_cost(&cost, n, &perm);
    // Heap's algorithm, iterative.
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let total = total_cost(&cost, n, &perm);
            if total < best_total {
                best_total = total;
                best.copy_from_slice(&perm);
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(MatchingResult {
        value: best_total / n as f64,
        permutation: best,
        metric,
        frame: mu.frame(),
    })
}

fn total_cost(cost: &[f64], n: usize, perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum()
}

/// W1 on the line via the monotone representation: sorting both samples and
/// averaging the paired gaps equals the integrated absolute CDF difference.
/// O(n log n).
pub fn w1_1d(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::SizeMismatch(xs.len(), ys.len()));
    }
    if xs.is_empty() {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|p, q| p.partial_cmp(q).unwrap());
    b.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let total: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
    Ok(total / xs.len() as f64)
}
