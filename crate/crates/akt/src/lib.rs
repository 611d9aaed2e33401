//! Exact Kantorovich W1 optimal-matching costs between empirical measures on
//! the unit cube and the flat torus, certified Fourier-analytic upper bounds,
//! and seeded Monte Carlo experiments reproducing the classical
//! Ajtai-Komlos-Tusnady matching rates in dimensions 1, 2, and >= 3.
//!
//! Modules:
//! - [`torus`]: coordinate frames, the torus metric, the periodization map.
//! - [`measure`]: empirical measures, samplers, splittable random streams,
//!   heat-kernel-smoothed sampling.
//! - [`transport`]: exact W1 by dense assignment, brute-force oracle, and the
//!   sorted one-dimensional fast path.
//! - [`fourier`]: characteristic functions, certified upper bounds with
//!   rigorous truncation tails, theta-type lattice series, rate constants.
//! - [`lower`]: per-instance lower-bound statistics and diagnostic series.
//! - [`experiment`]: config-driven Monte Carlo runner, rate fitting, and
//!   byte-reproducible CSV/JSON emission.
//!
//! With the default `parallel` feature, cost matrices, grid quadrature, and
//! experiment trials fan out over a rayon pool; results are bit-identical to
//! the sequential build (`--no-default-features`).

pub mod error;
pub mod experiment;
pub mod fourier;
pub mod lower;
pub mod measure;
pub mod torus;
pub mod transport;

pub use error::{Error, Result};
pub use experiment::{
    run_experiment, AggregateRow, Comparison, ExperimentConfig, FitModel, RateFit, SamplerSpec,
    TPolicy, TrialRecord,
};
pub use fourier::{FourierBoundReport, MmaxPolicy, SeriesValue};
pub use measure::{DiscreteMeasure, RngStream};
pub use torus::{Frame, Point};
pub use transport::{MatchingResult, Metric};
