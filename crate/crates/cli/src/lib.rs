//! Command-line front end: argument parsing, input loading, exit codes and
//! output files with their run manifests.

pub mod commands;
pub mod output;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::Value;
use tariff_nash::{Error, MarketModel, ModelSpec, SolverConfig};

pub use output::{Cell, Format, Output, RunManifest};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_MISMATCH: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "tariff-nash", version, about = "Nash tariffs and exchange rates for a two-nation trade model")]
pub struct Cli {
    /// Market model JSON; defaults to the symmetric rational-square model.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Partial solver configuration JSON; missing fields keep their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the result here, plus `<out>.manifest.json`, instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the configured (or scenario) RNG seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output format; tables default to CSV, everything else to JSON.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Equilibrium exchange rate and its tariff sensitivities.
    SolveRate {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        theta_star: f64,
    },
    /// Gains from trade of both nations.
    Gains {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        theta_star: f64,
        /// Exchange rate; solved from the tariffs when omitted.
        #[arg(long)]
        rate: Option<f64>,
    },
    /// Rate and gains over a K x K grid of the tariff box.
    Sweep {
        #[arg(long, default_value_t = 11)]
        grid: usize,
    },
    /// Nash equilibrium triple.
    Nash {
        #[arg(long, value_enum, default_value_t = commands::Method::Newton)]
        method: commands::Method,
        /// Starting tariffs `theta,theta_star` for best-response iteration.
        #[arg(long, value_parser = parse_pair, default_value = "0.9,0.9")]
        start: (f64, f64),
    },
    /// Residuals and second-order conditions at a given triple.
    Verify {
        /// `e,theta,theta_star`
        #[arg(long, value_parser = parse_triple)]
        triple: (f64, f64, f64),
    },
    /// Samples a commodity scenario and writes the empirical model JSON.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        /// Truncation bound M of the written model.
        #[arg(long, default_value_t = tariff_nash::demand::DEFAULT_BOUND)]
        bound: f64,
    },
    /// Demand curves `x, D(x), D*(x), D*(1/x)` for plotting.
    Curves {
        /// `lo,hi` of the log-spaced grid; defaults to `1/M,M`.
        #[arg(long, value_parser = parse_pair)]
        range: Option<(f64, f64)>,
        /// Rows, including the leading `x = 0` row.
        #[arg(long, default_value_t = 202)]
        points: usize,
    },
    /// Equilibrium rate over a K x K grid of the tariff box.
    RateSurface {
        #[arg(long, default_value_t = 41)]
        grid: usize,
    },
    /// Reruns the worked examples and tabulates them against reference values.
    ReproducePaper,
    /// Prints the default solver configuration.
    DefaultConfig,
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> =
        s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"))).collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", v.len()));
    }
    Ok(v)
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    parse_floats(s, 2).map(|v| (v[0], v[1]))
}

fn parse_triple(s: &str) -> Result<(f64, f64, f64), String> {
    parse_floats(s, 3).map(|v| (v[0], v[1], v[2]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// Input problems exit with 2, numerical failures with 3.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain { .. } | Error::InvalidParameter(_) | Error::TariffOutOfBox { .. } | Error::InvalidSample(_) => {
            EXIT_CONFIG
        }
        _ => EXIT_SOLVER,
    }
}

/// Stable snake_case name of an error, used in CSV error columns.
pub fn error_code(e: &Error) -> &'static str {
    match e {
        Error::Domain { .. } => "domain",
        Error::InvalidParameter(_) => "invalid_parameter",
        Error::Kink { .. } => "kink",
        Error::TariffOutOfBox { .. } => "tariff_out_of_box",
        Error::NoEquilibriumInBox { .. } => "no_equilibrium_in_box",
        Error::SingularDenominator(_) => "singular_denominator",
        Error::Integration { .. } => "integration",
        Error::NoNashFound(_) => "no_nash_found",
        Error::SaddleRejected { .. } => "saddle_rejected",
        Error::Boundary { .. } => "boundary",
        Error::NonConvergent { .. } => "non_convergent",
        Error::BestResponseFailed => "best_response_failed",
        Error::InvalidSample(_) => "invalid_sample",
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self { code: exit_code(&e), message: e.to_string() }
    }
}

/// Loaded inputs shared by every command.
pub struct Context {
    pub model: MarketModel<f64>,
    pub config: SolverConfig<f64>,
    pub seed_override: Option<u64>,
    pub digests: BTreeMap<String, String>,
}

impl Context {
    pub fn digest(&mut self, role: &str, bytes: &[u8]) {
        self.digests.insert(role.to_string(), output::sha256_hex(bytes));
    }

    pub fn read(&mut self, role: &str, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        self.digest(role, &bytes);
        Ok(bytes)
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(what: &str, bytes: &[u8]) -> Result<T, CliError> {
    serde_json::from_slice(bytes).map_err(|e| CliError::config(format!("invalid {what} JSON: {e}")))
}

/// Reads a partial config, rejecting unknown keys so typos do not pass silently.
pub fn parse_config(bytes: &[u8]) -> Result<SolverConfig<f64>, CliError> {
    let given: Value = parse_json("config", bytes)?;
    let Value::Object(map) = &given else {
        return Err(CliError::config("config must be a JSON object"));
    };
    let known = serde_json::to_value(SolverConfig::<f64>::default()).expect("config serializes");
    if let Some(k) = map.keys().find(|k| known.get(k.as_str()).is_none()) {
        return Err(CliError::config(format!("unknown config field `{k}`")));
    }
    let cfg: SolverConfig<f64> =
        serde_json::from_value(given).map_err(|e| CliError::config(format!("invalid config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_context(cli: &Cli) -> Result<Context, CliError> {
    let mut ctx = Context {
        model: MarketModel::rational_square(),
        config: SolverConfig::default(),
        seed_override: cli.seed,
        digests: BTreeMap::new(),
    };
    if let Some(path) = &cli.model {
        let bytes = ctx.read("model", path)?;
        let spec: ModelSpec = parse_json("model", &bytes)?;
        ctx.model = spec.to_model()?;
    }
    if let Some(path) = &cli.config {
        let bytes = ctx.read("config", path)?;
        ctx.config = parse_config(&bytes)?;
    }
    if let Some(seed) = cli.seed {
        ctx.config.rng_seed = seed;
    }
    Ok(ctx)
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    /// Exit status; nonzero when the result itself is a negative verdict
    /// (an unaccepted Nash point, a reproduction mismatch).
    pub status: u8,
    pub written: Option<PathBuf>,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Runs a parsed command. With `--out` the text goes to that file and the
/// manifest next to it; otherwise it is returned for printing.
pub fn run(cli: &Cli, argv: &[String]) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let mut ctx = load_context(cli)?;
    let result = commands::execute(&cli.command, &mut ctx)?;
    let format = cli.format.unwrap_or_else(|| result.output.default_format());
    let text = result.output.render(format);
    let written = match &cli.out {
        None => None,
        Some(path) => {
            fs::write(path, &text).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
            let manifest = RunManifest {
                command: argv.to_vec(),
                input_digests: ctx.digests.clone(),
                config: serde_json::to_value(&ctx.config).expect("config serializes"),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                rng_seed: result.rng_seed.unwrap_or(ctx.config.rng_seed),
                rng_algorithm: tariff_nash::montecarlo::RNG_ALGORITHM,
                output_digest: output::sha256_hex(text.as_bytes()),
                wall_time_seconds: started.elapsed().as_secs_f64(),
            };
            let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
            let mpath = manifest_path(path);
            fs::write(&mpath, body).map_err(|e| CliError::config(format!("cannot write {}: {e}", mpath.display())))?;
            Some(path.clone())
        }
    };
    Ok(Outcome { text, status: result.status, written })
}
