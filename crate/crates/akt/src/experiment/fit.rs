//! Least-squares rate fitting for aggregated experiment results.

use serde::Serialize;

use crate::error::{Error, Result};

use super::AggregateRow;

/// Parametric rate family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `mean = C * n^(-beta)`, fit by least squares in log space.
    Power,
    /// `mean = C * sqrt(log n / n)`, scalar fit minimizing squared relative
    /// residuals.
    SqrtLog,
}

/// Fitted rate with per-n relative residuals `(mean - pred) / mean`.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub model: FitModel,
    /// Scale constant C.
    pub scale: f64,
    /// Exponent beta (power model only).
    pub exponent: Option<f64>,
    /// Coefficient of determination in log space.
    pub r_squared: f64,
    pub residuals: Vec<(usize, f64)>,
}

fn prediction(model: FitModel, scale: f64, exponent: Option<f64>, n: usize) -> f64 {
    let nf = n as f64;
    match model {
        FitModel::Power => scale * nf.powf(-exponent.unwrap_or(0.0)),
        FitModel::SqrtLog => scale * (nf.ln() / nf).sqrt(),
    }
}

/// Fits the chosen rate model to per-n means. Requires at least three
/// distinct n values with positive means.
pub fn fit_rate(rows: &[AggregateRow], model: FitModel) -> Result<RateFit> {
    let mut seen = std::collections::BTreeSet::new();
    for row in rows {
        if crate::error::ensure_positive(row.mean, "mean").is_err() {
            return Err(Error::InvalidParameter(format!(
                "non-positive mean {} at n = {}",
                row.mean, row.n
            )));
        }
        seen.insert(row.n);
    }
    if seen.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "rate fitting needs >= 3 distinct n values, got {}",
            seen.len()
        )));
    }

    let (scale, exponent) = match model {
        FitModel::Power => {
            // Ordinary least squares on log mean = log C - beta log n.
            let k = rows.len() as f64;
            let sx: f64 = rows.iter().map(|r| (r.n as f64).ln()).sum();
            let sy: f64 = rows.iter().map(|r| r.mean.ln()).sum();
            let sxx: f64 = rows.iter().map(|r| (r.n as f64).ln().powi(2)).sum();
            let sxy: f64 = rows.iter().map(|r| (r.n as f64).ln() * r.mean.ln()).sum();
            let denom = k * sxx - sx * sx;
            if denom.abs() < 1e-12 {
                return Err(Error::InvalidParameter(
                    "degenerate design: all n equal".into(),
                ));
            }
            let slope = (k * sxy - sx * sy) / denom;
            let intercept = (sy - slope * sx) / k;
            (intercept.exp(), Some(-slope))
        }
        FitModel::SqrtLog => {
            // Minimize sum((mean - C g)/mean)^2 with g = sqrt(log n / n):
            // with r = g/mean the optimum is C = sum(r) / sum(r^2).
            let mut sr = 0.0;
            let mut srr = 0.0;
            for row in rows {
                let g = ((row.n as f64).ln() / row.n as f64).sqrt();
                let r = g / row.mean;
                sr += r;
                srr += r * r;
            }
            (sr / srr, None)
        }
    };

    let residuals: Vec<(usize, f64)> = rows
        .iter()
        .map(|r| {
            let pred = prediction(model, scale, exponent, r.n);
            (r.n, (r.mean - pred) / r.mean)
        })
        .collect();

    // R^2 in log space for both models, so the two fits are comparable.
    let log_means: Vec<f64> = rows.iter().map(|r| r.mean.ln()).collect();
    let mean_log = log_means.iter().sum::<f64>() / log_means.len() as f64;
    let ss_tot: f64 = log_means.iter().map(|y| (y - mean_log).powi(2)).sum();
    let ss_res: f64 = rows
        .iter()
        .map(|r| {
            let pred = prediction(model, scale, exponent, r.n);
            (r.mean.ln() - pred.ln()).powi(2)
        })
        .sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };

    Ok(RateFit {
        model,
        scale,
        exponent,
        r_squared,
        residuals,
    })
}

/// Mean of the squared relative residuals of a fit.
pub fn mean_squared_relative_residual(fit: &RateFit) -> f64 {
    fit.residuals.iter().map(|(_, r)| r * r).sum::<f64>() / fit.residuals.len() as f64
}
