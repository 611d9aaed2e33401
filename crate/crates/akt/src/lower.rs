//! Computable per-instance lower bounds on W1 and the diagnostic lattice
//! series controlling the smoothed Fourier bound's size.

use crate::error::{Error, Result};
use crate::fourier::{lattice_weighted_sum, weighted_theta_sum, SeriesValue};
use crate::measure::DiscreteMeasure;
use crate::torus::{euclidean_distance_slice, Frame};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Which lower-bound statistic produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBoundKind {
    /// Absolute sum statistic from the monotone representation on the line.
    OneDimSum,
    /// Quadrature (or exact discrete average) of the distance to a sample.
    DistToSample,
}

/// A certified lower bound: `value - quadrature_error` never exceeds the
/// corresponding W1 on the same instance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LowerBoundReport {
    pub kind: LowerBoundKind,
    pub value: f64,
    pub quadrature_error: f64,
}

/// One-dimensional statistic `(1/n) |sum_k (x_k - y_k)|`.
///
/// The monotone representation writes W1 on the line as the integral of the
/// absolute CDF difference, which dominates the absolute value of its own
/// integral `(1/n) sum (y_k - x_k)`; so this is a per-instance lower bound.
pub fn lower_1d_statistic(xs: &[f64], ys: &[f64]) -> Result<LowerBoundReport> {
    if xs.len() != ys.len() {
        return Err(Error::SizeMismatch(xs.len(), ys.len()));
    }
    if xs.is_empty() {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    let sum: f64 = xs.iter().zip(ys).map(|(x, y)| x - y).sum();
    Ok(LowerBoundReport {
        kind: LowerBoundKind::OneDimSum,
        value: sum.abs() / xs.len() as f64,
        quadrature_error: 0.0,
    })
}

/// Multi-dimensional extension of [`lower_1d_statistic`]: the maximum over
/// coordinate axes of `(1/n) |sum_k (x_k - y_k)_axis|`.
///
/// Each coordinate projection is 1-Lipschitz for both the Euclidean and the
/// torus metric on `[0,1]^d`-supported inputs, so duality makes this a valid
/// per-instance lower bound on W1 between the two empirical measures.
pub fn coordinate_lower_statistic(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<LowerBoundReport> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch(mu.dim(), nu.dim()));
    }
    if mu.n() != nu.n() {
        return Err(Error::SizeMismatch(mu.n(), nu.n()));
    }
    let d = mu.dim();
    let mut best = 0.0f64;
    for axis in 0..d {
        let sum: f64 = mu
            .points()
            .zip(nu.points())
            .map(|(x, y)| x[axis] - y[axis])
            .sum();
        best = best.max(sum.abs() / mu.n() as f64);
    }
    Ok(LowerBoundReport {
        kind: LowerBoundKind::OneDimSum,
        value: best,
        quadrature_error: 0.0,
    })
}

/// Midpoint-rule quadrature of `x -> dist(x, sample)` over the unit cube.
///
/// By duality, W1 between the empirical measure of the sample and the uniform
/// distribution dominates this integral; the integrand is exactly 1-Lipschitz,
/// so subtracting the certificate `sqrt(d) * h / 2` (with `h` the cell width)
/// yields a rigorous lower bound. Cost grows as `resolution^d`; restricted to
/// `d <= 4`.
pub fn dist_to_sample_integral(
    sample: &DiscreteMeasure,
    grid_resolution: usize,
) -> Result<LowerBoundReport> {
    if sample.frame() != Frame::UnitCube {
        return Err(Error::FrameMismatch {
            expected: Frame::UnitCube,
            got: sample.frame(),
        });
    }
    let d = sample.dim();
    if d > 4 {
        return Err(Error::InvalidParameter(format!(
            "grid quadrature limited to d <= 4, got {d}"
        )));
    }
    if grid_resolution < 2 {
        return Err(Error::InvalidParameter(
            "grid resolution must be >= 2 per axis".into(),
        ));
    }
    let cells = grid_resolution.pow(d as u32);
    let h = 1.0 / grid_resolution as f64;

    let cell_value = |mut idx: usize| -> f64 {
        let mut center = [0.0f64; 4];
        for c in center.iter_mut().take(d) {
            *c = (idx % grid_resolution) as f64 * h + 0.5 * h;
            idx /= grid_resolution;
        }
        sample
            .points()
            .map(|p| euclidean_distance_slice(&center[..d], p))
            .fold(f64::INFINITY, f64::min)
    };

    #[cfg(feature = "parallel")]
    let total: f64 = {
        // Ordered collect keeps the reduction order fixed across thread counts.
        let values: Vec<f64> = (0..cells).into_par_iter().map(cell_value).collect();
        values.iter().sum()
    };
    #[cfg(not(feature = "parallel"))]
    let total: f64 = (0..cells).map(cell_value).sum();

    Ok(LowerBoundReport {
        kind: LowerBoundKind::DistToSample,
        value: total / cells as f64,
        quadrature_error: (d as f64).sqrt() * h / 2.0,
    })
}

/// Exact discrete analogue of [`dist_to_sample_integral`] for a finitely
/// supported target: the average over the target's atoms of the distance to
/// the nearest sample point. Lower-bounds W1(sample measure, target measure)
/// with no quadrature error.
pub fn dist_to_sample_discrete(
    sample: &DiscreteMeasure,
    target: &DiscreteMeasure,
) -> Result<LowerBoundReport> {
    if sample.dim() != target.dim() {
        return Err(Error::DimensionMismatch(sample.dim(), target.dim()));
    }
    let total: f64 = target
        .points()
        .map(|q| {
            sample
                .points()
                .map(|p| euclidean_distance_slice(q, p))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(LowerBoundReport {
        kind: LowerBoundKind::DistToSample,
        value: total / target.n() as f64,
        quadrature_error: 0.0,
    })
}

/// Expected smoothed Fourier energy `c(n,t) = (2/n) * S~_d(2t)`, the mean of
/// the weighted squared characteristic-function gap for `n` iid uniform
/// samples at smoothing time `t`.
pub fn expected_energy(n: usize, t: f64, d: usize) -> Result<SeriesValue> {
    if n < 1 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let base = weighted_theta_sum(2.0 * t, d)?;
    let scale = 2.0 / n as f64;
    Ok(SeriesValue {
        value: scale * base.value,
        error_bound: scale * base.error_bound,
    })
}

/// Fourth-moment control term `e(n,t) = (1/n^3) * (sum_{m != 0}
/// exp(-|m|^2 t) / |m|)^4`, with the truncation error propagated through the
/// fourth power.
pub fn fourth_moment_term(n: usize, t: f64, d: usize) -> Result<SeriesValue> {
    if n < 1 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let inner = lattice_weighted_sum(t, d, 1)?;
    let n3 = (n as f64).powi(3);
    let value = inner.value.powi(4) / n3;
    let upper = (inner.value + inner.error_bound).powi(4) / n3;
    Ok(SeriesValue {
        value,
        error_bound: upper - value,
    })
}
