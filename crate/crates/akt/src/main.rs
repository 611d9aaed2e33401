//! Command-line interface: exact matching, certified bounds, lattice series,
//! Monte Carlo experiments, and rate fits.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use akt::error::Error;
use akt::experiment::{
    emit_results, fit_rate, read_aggregates_csv, run_experiment, ExperimentConfig, FitModel,
    OutputFormat,
};
use akt::fourier::{self, MmaxPolicy};
use akt::lower;
use akt::measure::{read_points_csv, DiscreteMeasure};
use akt::transport::{w1_exact, MatchingResult, Metric};

const PI: f64 = std::f64::consts::PI;

#[derive(Parser)]
#[command(
    name = "akt",
    version,
    about = "Exact W1 matching costs, certified Fourier bounds, and optimal-matching-rate experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Euclidean,
    Torus,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::Euclidean => Metric::Euclidean,
            MetricArg::Torus => Metric::Torus,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Power,
    Sqrtlog,
}

#[derive(Clone, Copy, ValueEnum)]
enum SeriesFn {
    /// T_1(t): one-dimensional theta sum.
    T1,
    /// T_d(t): lattice theta sum via the product identity.
    Td,
    /// S~_d(t): inverse-square weighted theta sum.
    Sd,
    /// c(n,t): expected smoothed Fourier energy (2/n) S~_d(2t).
    C,
    /// e(n,t): fourth-moment control term.
    E,
}

#[derive(Subcommand)]
enum Command {
    /// Exact W1 between two point lists (unit-cube CSV, no header).
    Match {
        /// First point list.
        #[arg(long)]
        x: PathBuf,
        /// Second point list (same size and dimension).
        #[arg(long)]
        y: PathBuf,
        #[arg(long, value_enum, default_value = "euclidean")]
        metric: MetricArg,
        /// Input coordinate frame; only `unit` is accepted.
        #[arg(long, default_value = "unit")]
        frame: String,
        /// Also print the optimal permutation.
        #[arg(long)]
        permutation: bool,
    },
    /// Certified Fourier upper bound on the torus W1 between two point lists.
    Bound {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        /// Smoothing time, or `auto` for 1/(2n).
        #[arg(long, default_value = "auto")]
        t: String,
        /// Truncation radius, or `auto` for the adaptive policy.
        #[arg(long, default_value = "auto")]
        mmax: String,
    },
    /// Run a config-driven Monte Carlo experiment and write results.
    Experiment {
        /// JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Output path (CSV trial table plus `.agg.csv` sibling, or JSON).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Worker threads (0 = all cores). Results are identical either way.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Fit a rate model to an aggregate CSV.
    Fit {
        /// Aggregate table produced by `experiment` (the `.agg.csv` file).
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        model: ModelArg,
    },
    /// Evaluate a lattice series with its rigorous truncation error.
    Series {
        #[arg(long = "fn", value_enum)]
        function: SeriesFn,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long)]
        t: f64,
        /// Sample count (required for c and e).
        #[arg(long)]
        n: Option<usize>,
    },
}

fn load_pair(x: &Path, y: &Path) -> Result<(DiscreteMeasure, DiscreteMeasure), Error> {
    Ok((read_points_csv(x)?, read_points_csv(y)?))
}

fn print_matching(result: &MatchingResult, metric: MetricArg, scale: f64, permutation: bool) {
    let metric_name = match metric {
        MetricArg::Euclidean => "euclidean",
        MetricArg::Torus => "torus",
    };
    println!("n = {}", result.permutation.len());
    println!("metric = {metric_name}");
    println!("w1 = {}", result.value / scale);
    if permutation {
        let sigma: Vec<String> = result.permutation.iter().map(|j| j.to_string()).collect();
        println!("sigma = {}", sigma.join(" "));
    }
}

fn cmd_match(
    x: PathBuf,
    y: PathBuf,
    metric: MetricArg,
    frame: String,
    permutation: bool,
) -> Result<(), Error> {
    if frame != "unit" {
        return Err(Error::Config(format!(
            "unsupported frame {frame:?}; point CSVs are ingested in the unit frame"
        )));
    }
    let (mu, nu) = load_pair(&x, &y)?;
    match metric {
        MetricArg::Euclidean => {
            let r = w1_exact(&mu, &nu, Metric::Euclidean)?;
            print_matching(&r, metric, 1.0, permutation);
        }
        MetricArg::Torus => {
            // Unit-frame inputs are scaled into [0, pi]^d; the value is
            // reported back in unit-cube units.
            let r = w1_exact(&mu.to_half_torus()?, &nu.to_half_torus()?, Metric::Torus)?;
            print_matching(&r, metric, PI, permutation);
        }
    }
    Ok(())
}

fn cmd_bound(x: PathBuf, y: PathBuf, t: String, mmax: String) -> Result<(), Error> {
    let (mu, nu) = load_pair(&x, &y)?;
    let t = match t.as_str() {
        "auto" => 1.0 / (2.0 * mu.n().max(nu.n()) as f64),
        other => other
            .parse()
            .map_err(|_| Error::Config(format!("invalid --t value {other:?}")))?,
    };
    let policy = match mmax.as_str() {
        "auto" => MmaxPolicy::Auto,
        other => MmaxPolicy::Fixed(
            other
                .parse()
                .map_err(|_| Error::Config(format!("invalid --mmax value {other:?}")))?,
        ),
    };
    let report =
        fourier::smoothed_fourier_bound(&mu.to_half_torus()?, &nu.to_half_torus()?, t, policy)?;
    println!("t = {}", report.t);
    println!("m_max = {}", report.m_max);
    println!("main_sum = {}", report.main_sum);
    println!("tail_bound = {}", report.tail_bound);
    println!("smoothing_term = {}", report.smoothing_term);
    println!("total = {}", report.total);
    println!("total_unit = {}", report.total / PI);
    Ok(())
}

fn cmd_experiment(
    config_path: PathBuf,
    out: PathBuf,
    format: FormatArg,
    jobs: usize,
) -> Result<(), Error> {
    let text =
        std::fs::read_to_string(&config_path).map_err(|e| Error::io(config_path.clone(), e))?;
    let config = ExperimentConfig::from_json(&text)?;

    let started = Instant::now();
    let (records, aggregates) = run_with_jobs(&config, jobs)?;
    let elapsed = started.elapsed().as_secs_f64();

    let format = match format {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::Json => OutputFormat::Json,
    };
    emit_results(&records, &aggregates, None, format, &out)?;

    for row in &aggregates {
        println!(
            "n = {}: mean = {} stderr = {} paper_bound = {} pass = {}",
            row.n, row.mean, row.stderr, row.paper_bound, row.pass
        );
    }
    eprintln!(
        "{} trials in {:.1} s -> {}",
        records.len(),
        elapsed,
        out.display()
    );
    Ok(())
}

#[cfg(feature = "parallel")]
fn run_with_jobs(
    config: &ExperimentConfig,
    jobs: usize,
) -> Result<(Vec<akt::TrialRecord>, Vec<akt::AggregateRow>), Error> {
    if jobs == 0 {
        return run_experiment(config);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("could not build a {jobs}-thread pool: {e}")))?;
    pool.install(|| run_experiment(config))
}

#[cfg(not(feature = "parallel"))]
fn run_with_jobs(
    config: &ExperimentConfig,
    jobs: usize,
) -> Result<(Vec<akt::TrialRecord>, Vec<akt::AggregateRow>), Error> {
    if jobs > 1 {
        eprintln!("built without the `parallel` feature; running sequentially");
    }
    run_experiment(config)
}

fn cmd_fit(input: PathBuf, model: ModelArg) -> Result<(), Error> {
    let rows = read_aggregates_csv(&input)?;
    let model = match model {
        ModelArg::Power => FitModel::Power,
        ModelArg::Sqrtlog => FitModel::SqrtLog,
    };
    let fit = fit_rate(&rows, model)?;
    match model {
        FitModel::Power => {
            println!("model = power");
            println!("C = {}", fit.scale);
            println!("beta = {}", fit.exponent.unwrap());
        }
        FitModel::SqrtLog => {
            println!("model = sqrtlog");
            println!("C = {}", fit.scale);
        }
    }
    println!("r_squared = {}", fit.r_squared);
    for (n, r) in &fit.residuals {
        println!("residual n = {n}: {r}");
    }
    Ok(())
}

fn cmd_series(function: SeriesFn, d: usize, t: f64, n: Option<usize>) -> Result<(), Error> {
    let need_n = || n.ok_or_else(|| Error::Config("this series requires --n".into()));
    let series = match function {
        SeriesFn::T1 => fourier::theta_sum_1d(t)?,
        SeriesFn::Td => fourier::theta_sum(t, d)?,
        SeriesFn::Sd => fourier::weighted_theta_sum(t, d)?,
        SeriesFn::C => lower::expected_energy(need_n()?, t, d)?,
        SeriesFn::E => lower::fourth_moment_term(need_n()?, t, d)?,
    };
    println!("value = {}", series.value);
    println!("error_bound = {}", series.error_bound);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Match {
            x,
            y,
            metric,
            frame,
            permutation,
        } => cmd_match(x, y, metric, frame, permutation),
        Command::Bound { x, y, t, mmax } => cmd_bound(x, y, t, mmax),
        Command::Experiment {
            config,
            out,
            format,
            jobs,
        } => cmd_experiment(config, out, format, jobs),
        Command::Fit { input, model } => cmd_fit(input, model),
        Command::Series { function, d, t, n } => cmd_series(function, d, t, n),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Config(_) | Error::InvalidParameter(_) | Error::Parse { .. } => 2,
                Error::InvariantViolation(_) => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
