//! Run configuration: flags, optional `key = value` defaults file, and the
//! `PVSIM_THREADS` environment override.
//!
//! Precedence, most binding first: environment (workers only), explicit
//! flags, config file entries, built-in per-command defaults.

use std::collections::BTreeMap;
use std::env;
use std::fmt;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pvsim_core::increments::{WindowRule, WindowSpec};

/// Environment variable that overrides the worker count.
pub const ENV_THREADS: &str = "PVSIM_THREADS";

/// A configuration or I/O problem that should exit with the usage code.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Top-level argument grammar.
#[derive(Debug, Parser)]
#[command(
    name = "pvsim",
    version,
    about = "Simulation and closed-form checks for the principal value of 1/W along a Brownian path"
)]
pub struct Cli {
    /// Defaults file of `key = value` lines; explicit flags take precedence.
    #[arg(long, value_name = "FILE", global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: SubCommand,
}

/// Scenario selection. Every subcommand shares the same flag set; unused
/// flags are accepted and ignored so config files can be shared.
#[derive(Debug, Subcommand)]
pub enum SubCommand {
    /// Closed-form table of the Y(1) law: x, density, cdf, tail_upper.
    Density(CommonArgs),
    /// Y(1) law, tail bound, and last-zero decomposition checks.
    #[command(name = "verify-fact21")]
    VerifyFact21(CommonArgs),
    /// Zero-skeleton record laws and the pair-independence shuffle test.
    #[command(name = "verify-eta")]
    VerifyEta(CommonArgs),
    /// Cross-validation and refinement study of the two PV estimators.
    #[command(name = "pv-study")]
    PvStudy(CommonArgs),
    /// Windowed increment statistics with their growth normalizers.
    Increments(CommonArgs),
    /// Dyadic trend scans of the iterated-logarithm channels.
    Trend(CommonArgs),
    /// Small-deviation probabilities of sup of |Y| over the unit horizon.
    Smalldev(CommonArgs),
}

impl SubCommand {
    fn split(&self) -> (Command, &CommonArgs) {
        match self {
            SubCommand::Density(a) => (Command::Density, a),
            SubCommand::VerifyFact21(a) => (Command::VerifyFact21, a),
            SubCommand::VerifyEta(a) => (Command::VerifyEta, a),
            SubCommand::PvStudy(a) => (Command::PvStudy, a),
            SubCommand::Increments(a) => (Command::Increments, a),
            SubCommand::Trend(a) => (Command::Trend, a),
            SubCommand::Smalldev(a) => (Command::Smalldev, a),
        }
    }
}

/// Flags shared by every scenario.
#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Monte Carlo paths (chains for verify-eta; ignored by density).
    #[arg(long)]
    pub paths: Option<usize>,
    /// Grid steps per path (unit-window steps for verify-eta).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Master seed; per-path seeds are derived by counter mixing.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; PVSIM_THREADS overrides this.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output file; defaults to `<command>.<format>` in the working directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format: `csv` (sample column) or `json` (test report).
    #[arg(long)]
    pub format: Option<String>,
    /// Window rule `a_T = rho T` with `0 < rho <= 1`.
    #[arg(long, conflicts_with_all = ["alpha", "window"])]
    pub rho: Option<f64>,
    /// Window rule `a_T = T / (ln T)^alpha` with `alpha > 0`.
    #[arg(long, conflicts_with = "window")]
    pub alpha: Option<f64>,
    /// Fixed window length `a_T = a`, in grid steps.
    #[arg(long)]
    pub window: Option<f64>,
}

/// Scenario identifier, decoupled from the argument grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Density,
    VerifyFact21,
    VerifyEta,
    PvStudy,
    Increments,
    Trend,
    Smalldev,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Density => "density",
            Command::VerifyFact21 => "verify-fact21",
            Command::VerifyEta => "verify-eta",
            Command::PvStudy => "pv-study",
            Command::Increments => "increments",
            Command::Trend => "trend",
            Command::Smalldev => "smalldev",
        }
    }
}

/// Output file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }

    fn parse(s: &str) -> Result<Self, UsageError> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(UsageError(format!(
                "unknown format {other:?}; expected csv or json"
            ))),
        }
    }
}

/// Fully resolved run description handed to the scenarios.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub n_paths: usize,
    pub n_steps: usize,
    pub master_seed: u64,
    pub workers: usize,
    pub window: WindowSpec<f64>,
    pub out_path: PathBuf,
    pub format: OutputFormat,
}

impl RunConfig {
    /// Human-readable window rule for the report echo.
    pub fn window_label(&self) -> String {
        match self.window.rule {
            WindowRule::ConstantFraction { rho } => format!("constant-fraction rho={rho}"),
            WindowRule::PowerLog { alpha } => format!("power-log alpha={alpha}"),
            WindowRule::Fixed { a } => format!("fixed a={a}"),
        }
    }
}

/// Per-command defaults: (paths, steps). Chosen so each command finishes in
/// well under five minutes on a four-core desktop.
fn default_shape(command: Command) -> (usize, usize) {
    match command {
        // Closed forms only; the sampling fields are unused.
        Command::Density => (1, 1),
        // 10^5 paths at 2^16 steps: decomposition biases sit below the
        // report thresholds from this resolution on.
        Command::VerifyFact21 => (100_000, 1 << 16),
        // 10_500 chains of up to 5 records each: >= 5*10^4 records.
        Command::VerifyEta => (10_500, 1 << 14),
        // Paired-estimator ensemble at the cross-validation resolution.
        Command::PvStudy => (10_000, 1 << 18),
        // Per-path increment rows are cheap; the horizon is in step units.
        Command::Increments => (400, 1 << 14),
        // One long trajectory per path, scanned over dyadic horizons.
        Command::Trend => (200, 1 << 20),
        // Small-deviation counts need a large ensemble of short paths.
        Command::Smalldev => (200_000, 1 << 12),
    }
}

const DEFAULT_SEED: u64 = 42;

/// Parse a `key = value` defaults file. Blank lines and `#` comments are
/// skipped; unknown keys are rejected so typos cannot silently vanish.
fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    const KNOWN: [&str; 9] = [
        "paths", "steps", "seed", "workers", "out", "format", "rho", "alpha", "window",
    ];
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(UsageError(format!(
                "config line {}: expected `key = value`, got {raw:?}",
                lineno + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        if !KNOWN.contains(&key) {
            return Err(UsageError(format!(
                "config line {}: unknown key {key:?}",
                lineno + 1
            )));
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(UsageError(format!(
                "config line {}: duplicate key {key:?}",
                lineno + 1
            )));
        }
    }
    Ok(map)
}

fn parsed<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, UsageError> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
            UsageError(format!("config key {key:?}: cannot parse value {raw:?}"))
        }),
    }
}

/// Resolve the full precedence stack into a [`RunConfig`].
pub fn resolve(cli: &Cli) -> Result<RunConfig, UsageError> {
    let (command, args) = cli.command.split();
    let file = match &cli.config {
        None => BTreeMap::new(),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                UsageError(format!("cannot read config file {}: {e}", path.display()))
            })?;
            parse_config_file(&text)?
        }
    };

    let (default_paths, default_steps) = default_shape(command);
    let n_paths = args
        .paths
        .or(parsed::<usize>(&file, "paths")?)
        .unwrap_or(default_paths);
    let n_steps = args
        .steps
        .or(parsed::<usize>(&file, "steps")?)
        .unwrap_or(default_steps);
    let master_seed = args
        .seed
        .or(parsed::<u64>(&file, "seed")?)
        .unwrap_or(DEFAULT_SEED);
    let mut workers = args
        .workers
        .or(parsed::<usize>(&file, "workers")?)
        .unwrap_or_else(default_workers);
    if let Some(env_workers) = env_threads()? {
        workers = env_workers;
    }

    if n_paths == 0 || n_steps == 0 {
        return Err(UsageError("paths and steps must be >= 1".into()));
    }
    if workers == 0 {
        return Err(UsageError("workers must be >= 1".into()));
    }

    let rho = args.rho.or(parsed::<f64>(&file, "rho")?);
    let alpha = args.alpha.or(parsed::<f64>(&file, "alpha")?);
    let window = args.window.or(parsed::<f64>(&file, "window")?);
    let rule = match (rho, alpha, window) {
        (Some(rho), None, None) => {
            if !(rho > 0.0 && rho <= 1.0) {
                return Err(UsageError(format!("rho must lie in (0, 1], got {rho}")));
            }
            WindowRule::ConstantFraction { rho }
        }
        (None, Some(alpha), None) => {
            if !(alpha > 0.0) {
                return Err(UsageError(format!("alpha must be positive, got {alpha}")));
            }
            WindowRule::PowerLog { alpha }
        }
        (None, None, Some(a)) => {
            if !(a > 0.0) {
                return Err(UsageError(format!("window must be positive, got {a}")));
            }
            WindowRule::Fixed { a }
        }
        (None, None, None) => WindowRule::ConstantFraction { rho: 0.5 },
        _ => {
            return Err(UsageError(
                "rho, alpha, and window are mutually exclusive".into(),
            ))
        }
    };

    let format = match args
        .format
        .as_deref()
        .map(str::to_string)
        .or_else(|| file.get("format").cloned())
    {
        Some(name) => OutputFormat::parse(&name)?,
        None => match command {
            Command::Density => OutputFormat::Csv,
            _ => OutputFormat::Json,
        },
    };
    let out_path = args
        .out
        .clone()
        .or_else(|| file.get("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(format!("{}.{}", command.name(), format.name())));

    Ok(RunConfig {
        command,
        n_paths,
        n_steps,
        master_seed,
        workers,
        window: WindowSpec::new(rule),
        out_path,
        format,
    })
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn env_threads() -> Result<Option<usize>, UsageError> {
    match env::var(ENV_THREADS) {
        Err(env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(UsageError(format!("{ENV_THREADS}: {e}"))),
        Ok(raw) if raw.trim().is_empty() => Ok(None),
        Ok(raw) => raw
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .map(Some)
            .ok_or_else(|| {
                UsageError(format!(
                    "{ENV_THREADS} must be a positive integer, got {raw:?}"
                ))
            }),
    }
}
