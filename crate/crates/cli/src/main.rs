//! `quadwalk` command-line front end.
//!
//! Every subcommand reads its inputs, calls one library operation and
//! serializes the result. Exit codes: 0 success, 1 hypothesis or validation
//! failure, 2 I/O or schema error, 3 numerical non-convergence or an
//! inapplicable exact method, 4 usage error.

use clap::{Parser, Subcommand, ValueEnum};
use quadwalk::classify::{self, ClassifyError, ClassifyOptions, StationarySolver};
use quadwalk::harmonic::{self, Expectation, HarmonicError, SweepConfig, Window};
use quadwalk::model::{self, IncrementLaw, Side, WalkSpec};
use quadwalk::projection::{ProjectionError, TruncationOptions};
use quadwalk::simulate::{self, SimConfig, SimError, SurvivalPoint};
use quadwalk::walks::{self, WalksError};
use quadwalk::Execution;
use serde::Serialize;
use serde_json::Value;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "quadwalk", version, about = "Reflected random walks on the quarter plane")]
struct Cli {
    /// Output format for reports.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Master seed for all stochastic output.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Worker threads for simulations (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the primary output here instead of stdout.
    #[arg(long, short = 'o', global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Auto,
    Exact,
    Truncate,
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum WindowArg {
    Below,
    Above,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the structural hypotheses of a model.
    Validate {
        model: PathBuf,
        /// Side of the irreducibility truncation box (default 8R).
        #[arg(long)]
        trunc: Option<usize>,
    },
    /// Compute chi and the recurrence/transience verdict.
    Classify {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        /// Steps for the occupation Monte Carlo solver.
        #[arg(long, default_value_t = 10_000_000)]
        steps: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol_crit: f64,
    },
    /// Stationary measure of one boundary projection chain.
    Stationary {
        model: PathBuf,
        #[arg(long, value_parser = parse_side)]
        side: Side,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        /// Initial truncation level K0.
        #[arg(long, default_value_t = 64)]
        k0: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 10_000_000)]
        steps: u64,
    },
    /// Simulate return times and write the survival curve as CSV.
    SimulateTail {
        model: PathBuf,
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        horizon: u64,
        #[arg(long, value_parser = parse_point)]
        start: (i64, i64),
        #[arg(long, default_value_t = 1000)]
        bootstrap: usize,
        /// Where to write the fit summary (default: stderr).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Fit a power-law tail to a CSV curve `n,survival,stderr`.
    Fit {
        curve: PathBuf,
        /// Number of trials behind the curve (inferred from stderr if absent).
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Monte Carlo drift sign checks for the harmonic Lyapunov function.
    VerifyDrift {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = WindowArg::Below)]
        window: WindowArg,
        /// Exponent of h; defaults to 1/2 (below) or 1/beta (above).
        #[arg(long)]
        alpha: Option<f64>,
        /// Window parameter; defaults to |chi|/4.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        radius: f64,
        #[arg(long, default_value_t = 10)]
        max_log2_n: u32,
        #[arg(long, default_value_t = 1_000_000)]
        samples_interior: u64,
        #[arg(long, default_value_t = 20_000)]
        samples_boundary: u64,
        /// Use the truncated function h_b.
        #[arg(long)]
        truncation: Option<f64>,
    },
    /// Normalized n-step drift from a boundary start.
    Stabilize {
        model: PathBuf,
        #[arg(long, value_parser = parse_side)]
        side: Side,
        #[arg(long)]
        n: u64,
        #[arg(long, value_parser = parse_point)]
        start: (i64, i64),
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// Probability that an excursion reaches norm s before returning.
    Excursion {
        model: PathBuf,
        #[arg(long, value_parser = parse_point)]
        start: (i64, i64),
        #[arg(long)]
        radius: f64,
        /// Comma-separated levels s.
        #[arg(long, value_delimiter = ',', required = true)]
        s: Vec<f64>,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        horizon: u64,
    },
    /// Build the Lindley walk spec for an increment law.
    Lindley { zeta: PathBuf },
    /// Build the mirror-reflected walk spec for an increment law.
    Mirror { zeta: PathBuf },
}

fn parse_side(s: &str) -> Result<Side, String> {
    s.parse::<u8>()
        .ok()
        .and_then(Side::from_index)
        .ok_or_else(|| format!("side must be 1 or 2, got {s:?}"))
}

fn parse_point(s: &str) -> Result<(i64, i64), String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected x,y, got {s:?}"))?;
    let p = |t: &str| t.trim().parse::<i64>().map_err(|e| format!("{t:?}: {e}"));
    Ok((p(x)?, p(y)?))
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Hypothesis(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Hypothesis(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Usage(_) => 4,
        }
    }
}

impl From<ProjectionError> for CliError {
    fn from(e: ProjectionError) -> Self {
        match e {
            ProjectionError::NotLeftContinuous { .. } => CliError::Numerical(format!(
                "{e}; rerun with --method truncate or --method mc"
            )),
            ProjectionError::TruncationTooSmall { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        match e {
            ClassifyError::HypothesisFailed(report) => CliError::Hypothesis(format!(
                "walk fails a required hypothesis:\n{}",
                serde_json::to_string_pretty(&report).unwrap_or_default()
            )),
            ClassifyError::Projection(p) => p.into(),
            ClassifyError::NonGenericDrift { .. } | ClassifyError::NotPositiveDefinite { .. } => {
                CliError::Hypothesis(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::ZeroOccupation | SimError::AllHitAtZero => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<HarmonicError> for CliError {
    fn from(e: HarmonicError) -> Self {
        match e {
            HarmonicError::Classify(c) => c.into(),
            HarmonicError::Origin | HarmonicError::Singular => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<WalksError> for CliError {
    fn from(e: WalksError) -> Self {
        match e {
            WalksError::IncrementRejected(report) => CliError::Hypothesis(format!(
                "increment law rejected:\n{}",
                serde_json::to_string_pretty(&report).unwrap_or_default()
            )),
            _ => CliError::Hypothesis(e.to_string()),
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::Io { path: path.display().to_string(), message: format!("schema error: {e}") })
}

fn read_model(path: &Path) -> Result<WalkSpec, CliError> {
    read_json(path)
}

fn write_to(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io { path: p.display().to_string(), message: e.to_string() }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| CliError::Io { path: "<stdout>".to_string(), message: e.to_string() })
        }
    }
}

/// Flattens a JSON value into `key value` rows with dotted paths.
fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, rows);
            }
        }
        Value::Array(items) if items.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, rows);
            }
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        _ => rows.push((prefix.to_string(), v.to_string())),
    }
}

fn render<T: Serialize>(value: &T, format: Format) -> String {
    let v = serde_json::to_value(value).expect("reports serialize to JSON");
    match format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&v).expect("valid JSON")),
        Format::Text => {
            let mut rows = Vec::new();
            flatten("", &v, &mut rows);
            let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            rows.iter().map(|(k, x)| format!("{k:<width$}  {x}\n")).collect()
        }
    }
}

fn solver(method: Method, steps: u64, seed: u64, k0: usize, tol: f64) -> StationarySolver {
    match method {
        Method::Auto => StationarySolver::Auto,
        Method::Exact => StationarySolver::Exact,
        Method::Truncate => StationarySolver::Truncated(TruncationOptions { initial_level: k0, tol, ..Default::default() }),
        Method::Mc => StationarySolver::OccupationMc { steps, seed },
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let exec = Execution::Parallel;
    let out = cli.out.as_deref();
    let emit = |v: &dyn ErasedReport| write_to(out, &v.render(cli.format));
    match &cli.command {
        Command::Validate { model: path, trunc } => {
            let spec = read_model(path)?;
            let report = model::validate(&spec, trunc.unwrap_or_else(|| model::default_truncation(&spec)));
            emit(&report)?;
            if !report.hard_pass() {
                return Err(CliError::Hypothesis("walk fails a required hypothesis (H, D or Sigma)".to_string()));
            }
        }
        Command::Classify { model: path, method, steps, tol_crit } => {
            let spec = read_model(path)?;
            let opts = ClassifyOptions {
                solver: solver(*method, *steps, cli.seed, TruncationOptions::default().initial_level, 1e-10),
                tol_crit: *tol_crit,
                irreducibility_box: None,
            };
            emit(&classify::classify(&spec, &opts)?)?;
        }
        Command::Stationary { model: path, side, method, k0, tol, steps } => {
            let spec = read_model(path)?;
            let m = classify::stationary_measure(&spec, *side, solver(*method, *steps, cli.seed, *k0, *tol))?;
            emit(&m)?;
        }
        Command::SimulateTail { model: path, radius, trials, horizon, start, bootstrap, summary } => {
            let spec = read_model(path)?;
            let cfg = SimConfig { bootstrap_resamples: *bootstrap, ..SimConfig::new(*start, *radius, *horizon, *trials, cli.seed) };
            let est = simulate::survival_curve(&spec, &cfg, exec)?;
            write_to(out, &est.to_csv())?;
            #[derive(Serialize)]
            struct Summary<'a> {
                trials: u64,
                horizon: u64,
                hits_at_zero: u64,
                censored_fraction: f64,
                fit: &'a Option<simulate::PowerLawFit>,
                notes: &'a [String],
            }
            let s = Summary {
                trials: est.trials,
                horizon: est.horizon,
                hits_at_zero: est.hits_at_zero,
                censored_fraction: est.censored_fraction,
                fit: &est.fit,
                notes: &est.notes,
            };
            let text = render(&s, cli.format);
            match summary {
                Some(p) => write_to(Some(p), &text)?,
                None => eprint!("{text}"),
            }
        }
        Command::Fit { curve, trials } => {
            let text = read_text(curve)?;
            let mut reader = csv::Reader::from_reader(text.as_bytes());
            let points = reader
                .deserialize::<SurvivalPoint>()
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Io { path: curve.display().to_string(), message: format!("schema error: {e}") })?;
            let fit = simulate::fit_curve(&points, *trials).ok_or_else(|| {
                CliError::Numerical("no fit: fewer than 3 grid points in the fit window".to_string())
            })?;
            emit(&fit)?;
        }
        Command::VerifyDrift {
            model: path,
            window,
            alpha,
            epsilon,
            radius,
            max_log2_n,
            samples_interior,
            samples_boundary,
            truncation,
        } => {
            let spec = read_model(path)?;
            let rep = classify::classify(&spec, &ClassifyOptions::default())?;
            let (window, expectation) = match window {
                WindowArg::Below => (Window::Below, Expectation::Negative),
                WindowArg::Above => (Window::Above, Expectation::NonNegative),
            };
            let eps = epsilon.unwrap_or(rep.chi.abs() / 4.0);
            let p = harmonic::choose_betas(rep.phi1, rep.phi2, rep.phi0, rep.chi, eps, window)?;
            let alpha = alpha.unwrap_or(match window {
                Window::Below => 0.5,
                Window::Above => 1.0 / p.beta,
            });
            let cfg = SweepConfig {
                compressions: (0..=*max_log2_n).map(|k| 1u32 << k).collect(),
                samples_interior: *samples_interior,
                samples_boundary: *samples_boundary,
                truncation: *truncation,
                ..SweepConfig::new(*radius, alpha, expectation, cli.seed)
            };
            emit(&harmonic::drift_sweep(&spec, &p, &cfg, exec)?)?;
        }
        Command::Stabilize { model: path, side, n, start, samples } => {
            let spec = read_model(path)?;
            emit(&simulate::stabilization_probe(&spec, *side, *n, *start, *samples, cli.seed, exec)?)?;
        }
        Command::Excursion { model: path, start, radius, s, trials, horizon } => {
            let spec = read_model(path)?;
            emit(&simulate::excursion_max_probe(&spec, *start, *radius, s, *trials, *horizon, cli.seed, exec)?)?;
        }
        Command::Lindley { zeta } => {
            let law: IncrementLaw = read_json(zeta)?;
            emit(&walks::lindley_spec(&law)?)?;
        }
        Command::Mirror { zeta } => {
            let law: IncrementLaw = read_json(zeta)?;
            emit(&walks::mirror_spec(&law)?)?;
        }
    }
    Ok(())
}

/// Object-safe rendering so `run` can emit any report type.
trait ErasedReport {
    fn render(&self, format: Format) -> String;
}

impl<T: Serialize> ErasedReport for T {
    fn render(&self, format: Format) -> String {
        render(self, format)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(4),
            };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".to_string())),
        #[cfg(feature = "parallel")]
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(|| run(&cli)),
            Err(e) => Err(CliError::Usage(format!("cannot start {k} threads: {e}"))),
        },
        _ => run(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
