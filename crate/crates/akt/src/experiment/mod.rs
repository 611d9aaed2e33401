//! Seeded Monte Carlo experiment runner with deterministic aggregation.
//!
//! Trials are independent given their pre-split random streams
//! (`root.substream(n).substream(trial)`), so the runner may execute them on
//! any number of workers and still collect results in a fixed order; outputs
//! are byte-identical across `--jobs` settings.

mod emit;
mod fit;

pub use emit::{aggregates_sibling_path, emit_results, read_aggregates_csv, OutputFormat};
pub use fit::{fit_rate, mean_squared_relative_residual, FitModel, RateFit};

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fourier::{
    akt_rate_bound, optimize_t, smoothed_fourier_bound, subset_rate_bound, MmaxPolicy,
};
use crate::lower::{coordinate_lower_statistic, dist_to_sample_discrete};
use crate::measure::{
    average_measure, default_rotation_maps, sample_iid_uniform, sample_renewal_pair,
    sample_rotation_pair, subset_empirical, subset_indices, DiscreteMeasure, RngStream,
};
use crate::torus::{Frame, Point};
use crate::transport::{w1_1d, w1_exact, Metric, MAX_DENSE_N};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

const PI: f64 = std::f64::consts::PI;
/// Substream tag reserved for per-n atom generation (trial indices are small).
const ATOM_STREAM: u64 = u64::MAX;

/// Sample generator selection, mirrored field-for-field by the config JSON.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerSpec {
    /// Two independent iid-uniform samples on `[0,1]^d`.
    IidUniform,
    /// Circle-rotation pair with the documented default maps (`d <= 2`).
    Rotation,
    /// Renewal-replacement chain: copy the previous pair with probability
    /// `rho_mix`, else redraw. Mixing coefficients decay like `rho_mix^l`.
    RenewalMixing { rho_mix: f64 },
    /// Uniform random subsets of a fixed atom collection. Provide either the
    /// atoms themselves or `atom_factor` (atoms per n, drawn once per n from
    /// the seed).
    SubsetOfAtoms {
        #[serde(default)]
        atoms: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        atom_factor: Option<usize>,
    },
}

/// What each trial compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// W1 between two equal-size samples.
    TwoSamples,
    /// W1 between a random n-subset measure and the average measure of all
    /// atoms (requires the subset sampler with exactly 2n atoms).
    SampleVsAtomAverage,
}

/// Smoothing-time policy for the certified bound.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TPolicy {
    /// `t = 1/(2n)`.
    HalfInvN,
    Fixed {
        t: f64,
    },
    /// Grid minimization of the certified total.
    Grid {
        ts: Vec<f64>,
    },
}

/// Full experiment specification. The config JSON mirrors this structure;
/// unknown keys are rejected.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension: usize,
    pub n_values: Vec<usize>,
    pub trials: usize,
    pub sampler: SamplerSpec,
    pub metric: Metric,
    pub comparison: Comparison,
    pub t_policy: TPolicy,
    pub seed: u64,
    #[serde(default)]
    pub compute_bounds: bool,
    #[serde(default)]
    pub compute_lower: bool,
}

/// One trial's results. `wall_time_ms` is measured and kept in memory for
/// progress reporting only; emitted files zero it so reruns are
/// byte-identical.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub n: usize,
    pub trial_index: usize,
    pub w1: f64,
    pub bound_total: Option<f64>,
    pub t_used: Option<f64>,
    pub lower: Option<f64>,
    pub wall_time_ms: f64,
}

/// Per-n summary statistics.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AggregateRow {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation / sqrt(trials).
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
    pub bound_mean: Option<f64>,
    /// Closed-form rate constant for this sampler family.
    pub paper_bound: f64,
    /// Whether `mean <= paper_bound`.
    pub pass: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.dimension == 0 {
            return fail("dimension must be >= 1".into());
        }
        if self.n_values.is_empty() {
            return fail("n_values must be nonempty".into());
        }
        if !self.n_values.windows(2).all(|w| w[0] < w[1]) {
            return fail("n_values must be strictly ascending".into());
        }
        if self.trials == 0 {
            return fail("trials must be >= 1".into());
        }
        let needs_solver = self.dimension > 1 || self.comparison == Comparison::SampleVsAtomAverage;
        for &n in &self.n_values {
            if n == 0 {
                return fail("n values must be >= 1".into());
            }
            if needs_solver && n > MAX_DENSE_N {
                return fail(format!(
                    "n = {n} exceeds the dense solver cap {MAX_DENSE_N}"
                ));
            }
        }
        match &self.sampler {
            SamplerSpec::IidUniform => {}
            SamplerSpec::Rotation => {
                if self.dimension > 2 {
                    return fail("rotation sampler defaults are defined for d <= 2".into());
                }
            }
            SamplerSpec::RenewalMixing { rho_mix } => {
                if !(*rho_mix > 0.0 && *rho_mix < 1.0) {
                    return fail(format!("rho_mix must lie in (0,1), got {rho_mix}"));
                }
            }
            SamplerSpec::SubsetOfAtoms { atoms, atom_factor } => match (atoms, atom_factor) {
                (Some(_), Some(_)) | (None, None) => {
                    return fail(
                        "subset_of_atoms needs exactly one of `atoms` or `atom_factor`".into(),
                    );
                }
                (Some(list), None) => {
                    if list.is_empty() {
                        return fail("atom list must be nonempty".into());
                    }
                    for (i, row) in list.iter().enumerate() {
                        if row.len() != self.dimension {
                            return fail(format!(
                                "atom {i} has {} coordinates, expected {}",
                                row.len(),
                                self.dimension
                            ));
                        }
                    }
                    for &n in &self.n_values {
                        if n > list.len() {
                            return fail(format!(
                                "n = {n} exceeds the {} supplied atoms",
                                list.len()
                            ));
                        }
                        if self.comparison == Comparison::SampleVsAtomAverage && list.len() != 2 * n
                        {
                            return fail("sample_vs_atom_average needs exactly 2n atoms".into());
                        }
                    }
                }
                (None, Some(factor)) => {
                    if *factor < 1 {
                        return fail("atom_factor must be >= 1".into());
                    }
                    if self.comparison == Comparison::SampleVsAtomAverage && *factor != 2 {
                        return fail(
                            "sample_vs_atom_average needs atom_factor = 2 (N = 2n)".into(),
                        );
                    }
                }
            },
        }
        if self.comparison == Comparison::SampleVsAtomAverage
            && !matches!(self.sampler, SamplerSpec::SubsetOfAtoms { .. })
        {
            return fail("sample_vs_atom_average requires the subset_of_atoms sampler".into());
        }
        match &self.t_policy {
            TPolicy::HalfInvN => {}
            TPolicy::Fixed { t } => {
                if crate::error::ensure_positive(*t, "fixed t").is_err() {
                    return fail(format!("fixed t must be positive, got {t}"));
                }
            }
            TPolicy::Grid { ts } => {
                if ts.is_empty()
                    || ts
                        .iter()
                        .any(|t| crate::error::ensure_positive(*t, "grid t").is_err())
                {
                    return fail("t grid must be nonempty with positive entries".into());
                }
            }
        }
        if !matches!(self.sampler, SamplerSpec::SubsetOfAtoms { .. }) {
            for &n in &self.n_values {
                if n < 2 {
                    return fail("n must be >= 2 for two-sample rate bounds".into());
                }
            }
        }
        Ok(())
    }
}

/// Per-n immutable context shared by that n's trials.
struct NContext {
    n: usize,
    atoms: Option<Vec<Point>>,
}

fn build_atoms(
    config: &ExperimentConfig,
    n: usize,
    root: &RngStream,
) -> Result<Option<Vec<Point>>> {
    let SamplerSpec::SubsetOfAtoms { atoms, atom_factor } = &config.sampler else {
        return Ok(None);
    };
    let list = match (atoms, atom_factor) {
        (Some(list), None) => list
            .iter()
            .map(|row| Point::new(row.clone(), Frame::UnitCube))
            .collect::<Result<Vec<_>>>()?,
        (None, Some(factor)) => {
            let stream = root.substream(n as u64).substream(ATOM_STREAM);
            let mut rng = stream.rng();
            let total = factor * n;
            (0..total)
                .map(|_| {
                    let coords: Vec<f64> = (0..config.dimension)
                        .map(|_| rand::Rng::random::<f64>(&mut rng))
                        .collect();
                    Point::new(coords, Frame::UnitCube)
                })
                .collect::<Result<Vec<_>>>()?
        }
        _ => unreachable!("validated"),
    };
    Ok(Some(list))
}

fn smoothing_time(policy: &TPolicy, n: usize) -> Option<f64> {
    match policy {
        TPolicy::HalfInvN => Some(1.0 / (2.0 * n as f64)),
        TPolicy::Fixed { t } => Some(*t),
        TPolicy::Grid { .. } => None,
    }
}

/// Exact W1 between two equal-size unit-cube measures, reported in unit-cube
/// units; d = 1 dispatches to the sorted representation (the two metrics
/// coincide for measures supported on `[0,1]^d` after pi-scaling).
fn unit_w1(mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: Metric) -> Result<f64> {
    if mu.dim() == 1 {
        let xs: Vec<f64> = mu.points().map(|p| p[0]).collect();
        let ys: Vec<f64> = nu.points().map(|p| p[0]).collect();
        return w1_1d(&xs, &ys);
    }
    match metric {
        Metric::Euclidean => Ok(w1_exact(mu, nu, Metric::Euclidean)?.value),
        Metric::Torus => {
            let hm = mu.to_half_torus()?;
            let hn = nu.to_half_torus()?;
            Ok(w1_exact(&hm, &hn, Metric::Torus)?.value / PI)
        }
    }
}

/// Certified Fourier bound in unit-cube units, with the smoothing time used.
fn unit_bound(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    policy: &TPolicy,
    n: usize,
) -> Result<(f64, f64)> {
    let hm = mu.to_half_torus()?;
    let hn = nu.to_half_torus()?;
    let (t, report) = match smoothing_time(policy, n) {
        Some(t) => (t, smoothed_fourier_bound(&hm, &hn, t, MmaxPolicy::Auto)?),
        None => {
            let TPolicy::Grid { ts } = policy else {
                unreachable!()
            };
            optimize_t(&hm, &hn, ts)?
        }
    };
    Ok((report.total / PI, t))
}

fn run_trial(config: &ExperimentConfig, ctx: &NContext, trial: usize) -> Result<TrialRecord> {
    let start = Instant::now();
    let n = ctx.n;
    let d = config.dimension;
    let stream = RngStream::new(config.seed)
        .substream(n as u64)
        .substream(trial as u64);

    let (w1, bound, lower) = match config.comparison {
        Comparison::TwoSamples => {
            let (mu, nu) = match &config.sampler {
                SamplerSpec::IidUniform => sample_iid_uniform(n, d, &stream)?,
                SamplerSpec::Rotation => {
                    let (u, v) = default_rotation_maps(d)?;
                    sample_rotation_pair(n, d, u, v, &stream)?
                }
                SamplerSpec::RenewalMixing { rho_mix } => {
                    sample_renewal_pair(n, d, *rho_mix, &stream)?
                }
                SamplerSpec::SubsetOfAtoms { .. } => {
                    let atoms = ctx.atoms.as_ref().expect("atoms prepared");
                    let mu = subset_empirical(atoms, n, &stream.substream(0))?;
                    let nu = subset_empirical(atoms, n, &stream.substream(1))?;
                    (mu, nu)
                }
            };
            let w1 = unit_w1(&mu, &nu, config.metric)?;
            let bound = if config.compute_bounds {
                Some(unit_bound(&mu, &nu, &config.t_policy, n)?)
            } else {
                None
            };
            let lower = if config.compute_lower {
                Some(coordinate_lower_statistic(&mu, &nu)?.value)
            } else {
                None
            };
            (w1, bound, lower)
        }
        Comparison::SampleVsAtomAverage => {
            let atoms = ctx.atoms.as_ref().expect("atoms prepared");
            debug_assert_eq!(atoms.len(), 2 * n);
            // tau and its complement; the subset-vs-average distance equals
            // half the average matched distance between them.
            let mut rng = stream.rng();
            let chosen = subset_indices(atoms.len(), n, &mut rng);
            let mut mask = vec![false; atoms.len()];
            for &i in &chosen {
                mask[i] = true;
            }
            let tau: Vec<Point> = chosen.iter().map(|&i| atoms[i].clone()).collect();
            let rest: Vec<Point> = (0..atoms.len())
                .filter(|&i| !mask[i])
                .map(|i| atoms[i].clone())
                .collect();
            let mu_tau = DiscreteMeasure::from_points(&tau)?;
            let mu_rest = DiscreteMeasure::from_points(&rest)?;
            let w1 = unit_w1(&mu_tau, &mu_rest, config.metric)? / 2.0;
            let bound = if config.compute_bounds {
                let avg = average_measure(atoms)?;
                Some(unit_bound(&mu_tau, &avg, &config.t_policy, n)?)
            } else {
                None
            };
            let lower = if config.compute_lower {
                let avg = average_measure(atoms)?;
                Some(dist_to_sample_discrete(&mu_tau, &avg)?.value)
            } else {
                None
            };
            (w1, bound, lower)
        }
    };

    let (bound_total, t_used) = match bound {
        Some((b, t)) => (Some(b), Some(t)),
        None => (None, None),
    };

    // The sandwich lower <= w1 <= bound is a theorem; a breach is a defect.
    if let Some(l) = lower {
        if l > w1 + 1e-9 {
            return Err(Error::InvariantViolation(format!(
                "lower bound {l} exceeds exact value {w1} at n = {n}, trial {trial}"
            )));
        }
    }
    if let Some(b) = bound_total {
        if w1 > b + 1e-9 {
            return Err(Error::InvariantViolation(format!(
                "exact value {w1} exceeds certified bound {b} at n = {n}, trial {trial}"
            )));
        }
    }

    Ok(TrialRecord {
        n,
        trial_index: trial,
        w1,
        bound_total,
        t_used,
        lower,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn aggregate(config: &ExperimentConfig, records: &[TrialRecord]) -> Result<Vec<AggregateRow>> {
    let mut by_n: BTreeMap<usize, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        by_n.entry(r.n).or_default().push(r);
    }
    let mut rows = Vec::with_capacity(by_n.len());
    for (n, group) in by_n {
        let k = group.len() as f64;
        let mean = group.iter().map(|r| r.w1).sum::<f64>() / k;
        let var = if group.len() > 1 {
            group.iter().map(|r| (r.w1 - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        let stderr = (var / k).sqrt();
        let min = group.iter().map(|r| r.w1).fold(f64::INFINITY, f64::min);
        let max = group.iter().map(|r| r.w1).fold(f64::NEG_INFINITY, f64::max);
        let bound_mean = if group.iter().all(|r| r.bound_total.is_some()) {
            Some(group.iter().map(|r| r.bound_total.unwrap()).sum::<f64>() / k)
        } else {
            None
        };
        let paper_bound = match &config.sampler {
            SamplerSpec::SubsetOfAtoms { .. } => subset_rate_bound(n, config.dimension)?,
            _ => akt_rate_bound(n, config.dimension)?,
        };
        rows.push(AggregateRow {
            n,
            mean,
            stderr,
            min,
            max,
            bound_mean,
            paper_bound,
            pass: mean <= paper_bound,
        });
    }
    Ok(rows)
}

/// Runs every `(n, trial)` cell of the config and aggregates per n.
///
/// Deterministic for a fixed config: trials consume pre-split streams and are
/// collected in a fixed order regardless of how many workers execute them
/// (install a rayon pool around this call to control parallelism).
pub fn run_experiment(config: &ExperimentConfig) -> Result<(Vec<TrialRecord>, Vec<AggregateRow>)> {
    config.validate()?;
    let root = RngStream::new(config.seed);
    let contexts: Vec<NContext> = config
        .n_values
        .iter()
        .map(|&n| {
            Ok(NContext {
                n,
                atoms: build_atoms(config, n, &root)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<(usize, usize)> = contexts
        .iter()
        .enumerate()
        .flat_map(|(ci, _)| (0..config.trials).map(move |t| (ci, t)))
        .collect();

    let run_cell = |&(ci, trial): &(usize, usize)| run_trial(config, &contexts[ci], trial);

    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<TrialRecord>> = cells.par_iter().map(run_cell).collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<TrialRecord>> = cells.iter().map(run_cell).collect();

    let records = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let aggregates = aggregate(config, &records)?;
    Ok((records, aggregates))
}
