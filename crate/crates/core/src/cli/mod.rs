//! The `mtfcost` command line.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or parameter error,
//! 3 numeric failure (the partial report is still printed).

mod commands;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::Error;
use crate::model::Model;
use crate::quad::QuadSpec;
use output::SeedInfo;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Environment variable consulted for a seed when neither flag nor config
/// gives one.
pub const SEED_ENV: &str = "MTFCOST_SEED";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// Messages of the failed computations; the report is already out.
    Numeric(Vec<String>),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(m) => CliError::Usage(m),
            e @ Error::Numeric { .. } => CliError::Numeric(vec![e.to_string()]),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Search-cost moments, Laplace transforms and simulations for
/// Move-to-Front lists with random request probabilities.
#[derive(Debug, Parser)]
#[command(name = "mtfcost", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Limiting moments E[S^k] with optional quadrature and Monte-Carlo checks.
    Moments(commands::MomentsArgs),
    /// Laplace transform E[e^{-sS}] of the limit and/or finite-n search cost.
    Laplace(commands::LaplaceArgs),
    /// Draw search costs; writes PREFIX.csv, PREFIX.summary.json and a manifest.
    Simulate(commands::SimulateArgs),
    /// Pitman-Yor limiting moment over a (theta, gamma) grid.
    Surface(commands::SurfaceArgs),
    /// The integrals I_n(l) whose boundedness in n gives moment convergence.
    Diagnostics(commands::DiagnosticsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Family {
    Gamma,
    Stable,
    Gg,
    Py,
}

/// Values a `--config` file may set; flags win over them.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    model: Option<Family>,
    gamma: Option<f64>,
    theta: Option<f64>,
    u: Option<f64>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    max_subdiv: Option<f64>,
    seed: Option<u64>,
    workers: Option<f64>,
    reps: Option<f64>,
    burn_in: Option<f64>,
}

impl Config {
    fn load(path: Option<&PathBuf>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// Positive integer, also written as `1e6`.
fn parse_count(s: &str) -> std::result::Result<u64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s}"))?;
    count_from_f64(v).ok_or_else(|| format!("expected a positive integer, got {s}"))
}

fn count_from_f64(v: f64) -> Option<u64> {
    (v >= 1.0 && v.fract() == 0.0 && v <= 9.007_199_254_740_992e15).then_some(v as u64)
}

fn config_count(v: Option<f64>, key: &str) -> CliResult<Option<u64>> {
    v.map(|x| count_from_f64(x).ok_or_else(|| CliError::Usage(format!("config {key} must be a positive integer, got {x}"))))
        .transpose()
}

#[derive(Debug, Clone, Args)]
struct ModelArgs {
    /// Weight model.
    #[arg(long, value_enum)]
    model: Option<Family>,
    /// Stability index (stable, gg, py).
    #[arg(long)]
    gamma: Option<f64>,
    /// Total mass (gamma) or strength (py).
    #[arg(long)]
    theta: Option<f64>,
    /// Tilt (gg).
    #[arg(long)]
    u: Option<f64>,
}

#[derive(Debug, Clone, Args)]
struct QuadArgs {
    /// Relative tolerance of the quadratures.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Absolute tolerance of the quadratures.
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Subdivision budget per quadrature.
    #[arg(long, value_parser = parse_count)]
    max_subdiv: Option<u64>,
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// JSON file with default values for the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Debug, Clone, Args)]
struct RunArgs {
    /// Monte-Carlo replications.
    #[arg(long, value_parser = parse_count)]
    reps: Option<u64>,
    /// RNG seed (falls back to the config, then MTFCOST_SEED, then a fresh one).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, value_parser = parse_count)]
    workers: Option<u64>,
    /// Chain requests before the observed one (default 50 n ln n).
    #[arg(long, value_parser = parse_count)]
    burn_in: Option<u64>,
}

/// Flags merged with the config file.
struct Resolved {
    config: Config,
    model: Option<Model>,
    quad: QuadSpec,
}

fn resolve_model(flags: &ModelArgs, cfg: &Config) -> CliResult<Model> {
    let family = flags.model.or(cfg.model);
    let gamma = flags.gamma.or(cfg.gamma);
    let theta = flags.theta.or(cfg.theta);
    let u = flags.u.or(cfg.u);
    let Some(family) = family else {
        return usage("--model is required (gamma, stable, gg or py)");
    };
    let name = match family {
        Family::Gamma => "gamma",
        Family::Stable => "stable",
        Family::Gg => "gg",
        Family::Py => "py",
    };
    let reject = |flag: &str, present: bool| -> CliResult<()> {
        if present {
            usage(format!("--{flag} does not apply to --model {name}"))
        } else {
            Ok(())
        }
    };
    let need = |flag: &str, v: Option<f64>| -> CliResult<f64> {
        v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for --model {name}")))
    };
    let model = match family {
        Family::Gamma => {
            reject("gamma", gamma.is_some())?;
            reject("u", u.is_some())?;
            Model::Dirichlet { theta: need("theta", theta)? }
        }
        Family::Stable => {
            reject("theta", theta.is_some())?;
            reject("u", u.is_some())?;
            Model::Stable { gamma: need("gamma", gamma)? }
        }
        Family::Gg => {
            reject("theta", theta.is_some())?;
            Model::GenGamma {
                gamma: need("gamma", gamma)?,
                u: need("u", u)?,
            }
        }
        Family::Py => {
            reject("u", u.is_some())?;
            Model::PitmanYor {
                gamma: need("gamma", gamma)?,
                theta: need("theta", theta)?,
            }
        }
    };
    model.validate()?;
    Ok(model)
}

fn resolve_quad(flags: &QuadArgs, cfg: &Config) -> CliResult<QuadSpec> {
    let mut spec = QuadSpec::default();
    if let Some(v) = flags.rel_tol.or(cfg.rel_tol) {
        spec.rel_tol = v;
    }
    if let Some(v) = flags.abs_tol.or(cfg.abs_tol) {
        spec.abs_tol = v;
    }
    if let Some(v) = flags.max_subdiv.or(config_count(cfg.max_subdiv, "max_subdiv")?) {
        spec.max_subdivisions = usize::try_from(v).unwrap_or(usize::MAX);
    }
    spec.validate()?;
    Ok(spec)
}

impl CommonArgs {
    fn resolve(&self, need_model: bool) -> CliResult<Resolved> {
        let config = Config::load(self.config.as_ref())?;
        let model = if need_model {
            Some(resolve_model(&self.model, &config)?)
        } else {
            None
        };
        let quad = resolve_quad(&self.quad, &config)?;
        Ok(Resolved { config, model, quad })
    }
}

/// Run-level settings after merging flags, config and environment.
#[derive(Debug, Clone, Copy)]
struct RunSettings {
    reps: u64,
    seed: SeedInfo,
    workers: usize,
    burn_in: Option<u64>,
}

impl RunArgs {
    fn resolve(&self, cfg: &Config, default_reps: u64) -> CliResult<RunSettings> {
        let seed = if let Some(v) = self.seed {
            SeedInfo { value: v, source: "flag" }
        } else if let Some(v) = cfg.seed {
            SeedInfo { value: v, source: "config" }
        } else if let Ok(text) = std::env::var(SEED_ENV) {
            let value = text
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got {text:?}")))?;
            SeedInfo { value, source: "env" }
        } else {
            SeedInfo {
                value: rand::random(),
                source: "generated",
            }
        };
        let default_workers = std::thread::available_parallelism().map_or(1, |n| n.get()) as u64;
        let workers = self
            .workers
            .or(config_count(cfg.workers, "workers")?)
            .unwrap_or(default_workers);
        Ok(RunSettings {
            reps: self.reps.or(config_count(cfg.reps, "reps")?).unwrap_or(default_reps),
            seed,
            workers: usize::try_from(workers).unwrap_or(usize::MAX),
            burn_in: self.burn_in.or(config_count(cfg.burn_in, "burn_in")?),
        })
    }
}

impl RunSettings {
    fn sim_config(&self) -> crate::sim::SimConfig {
        crate::sim::SimConfig {
            replications: self.reps,
            seed: self.seed.value,
            workers: self.workers,
            burn_in: self.burn_in,
        }
    }
}

/// Parses `args` (program name first) and runs the command, writing the
/// report to `stdout` and diagnostics to `stderr`. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut ctx = commands::Context { argv: &argv, stdout, stderr };
    let result = commands::dispatch(cli.command, &mut ctx);
    let stderr = ctx.stderr;
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_USAGE
        }
        Err(CliError::Numeric(ms)) => {
            for m in ms {
                let _ = writeln!(stderr, "error: {m}");
            }
            EXIT_NUMERIC
        }
        Err(CliError::Io(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_IO
        }
    }
}
