use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::json;

use super::output::{float, now, opt_float, Csv, Outputs, RunManifest, SeedInfo};
use super::{usage, CliError, CliResult, CommonArgs, Resolved, RunArgs, RunSettings};
use crate::analytic::{finiteness_bound, limit_moment, MomentRequest, MomentValue};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::quad::{self, QuadSpec};
use crate::sim::{self, Horizon, MomentEstimates};
use crate::special_fn::stirling2_row;
use crate::subordinator::{Exponent, GAMMA_MAX, GAMMA_MIN};

pub(super) struct Context<'a> {
    pub argv: &'a [String],
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
}

impl Context<'_> {
    fn print(&mut self, text: &str) -> CliResult<()> {
        self.stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}")))
    }

    fn note(&mut self, text: &str) {
        let _ = writeln!(self.stderr, "note: {text}");
    }

    fn manifest(&self, command: &str, parameters: serde_json::Value, seed: Option<SeedInfo>, started_at: String) -> RunManifest {
        RunManifest {
            command: command.into(),
            argv: self.argv.to_vec(),
            parameters,
            seed,
            version: env!("CARGO_PKG_VERSION"),
            started_at,
            finished_at: now(),
            outputs: Vec::new(),
        }
    }

    /// Prints `text`, or writes it to `PREFIX<suffix>` with a manifest.
    fn emit(&mut self, out: Option<&Path>, suffix: &str, text: &str, manifest: RunManifest) -> CliResult<()> {
        match out {
            None => self.print(text),
            Some(prefix) => {
                let mut files = Outputs::new(prefix);
                files.file(suffix, text)?;
                files.manifest(manifest)
            }
        }
    }
}

pub(super) fn dispatch(command: super::Command, ctx: &mut Context) -> CliResult<()> {
    use super::Command::*;
    match command {
        Moments(a) => moments(a, ctx),
        Laplace(a) => laplace(a, ctx),
        Simulate(a) => simulate(a, ctx),
        Surface(a) => surface(a, ctx),
        Diagnostics(a) => diagnostics(a, ctx),
    }
}

/// Numeric failures collected while a report is being built.
#[derive(Default)]
struct Failures(Vec<String>);

impl Failures {
    /// Value, or the partial estimate of a numeric failure.
    fn take(&mut self, what: &str, r: Result<f64>) -> CliResult<Option<f64>> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(Error::Numeric { message, partial }) => {
                self.0.push(format!("{what}: {message}"));
                Ok(partial)
            }
            Err(e) => Err(e.into()),
        }
    }

    fn finish(self) -> CliResult<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(CliError::Numeric(self.0))
        }
    }
}

impl RunArgs {
    fn any_set(&self) -> bool {
        self.reps.is_some() || self.seed.is_some() || self.workers.is_some() || self.burn_in.is_some()
    }
}

fn exponent_of(model: &Model) -> Option<Exponent> {
    model.exponent().ok().flatten()
}

fn psi_numeric(model: &Model, l: u32, spec: &QuadSpec) -> Result<f64> {
    match *model {
        Model::PitmanYor { gamma, theta } => quad::psi_l_pitman_yor_numeric(gamma, theta, l, spec),
        _ => quad::psi_l_numeric(&exponent_of(model).expect("non-mixture model"), l, spec),
    }
}

fn laplace_value(model: &Model, n: Option<usize>, s: f64, spec: &QuadSpec) -> Result<f64> {
    match (*model, n) {
        (Model::PitmanYor { gamma, theta }, None) => quad::laplace_limit_pitman_yor(gamma, theta, s, spec),
        (Model::PitmanYor { gamma, theta }, Some(n)) => quad::laplace_finite_n_pitman_yor(gamma, theta, n, s, spec),
        (_, None) => quad::laplace_limit(&exponent_of(model).expect("non-mixture model"), s, spec),
        (_, Some(n)) => quad::laplace_finite_n(&exponent_of(model).expect("non-mixture model"), n, s, spec),
    }
}

fn rel_error(numeric: Option<f64>, exact: f64) -> Option<f64> {
    numeric.map(|v| ((v - exact) / exact).abs())
}

fn items(n: u64) -> CliResult<usize> {
    match usize::try_from(n) {
        Ok(n) if n >= 2 => Ok(n),
        _ => usage(format!("--n must be >= 2, got {n}")),
    }
}

fn quad_json(spec: &QuadSpec) -> serde_json::Value {
    json!({
        "rel_tol": spec.rel_tol,
        "abs_tol": spec.abs_tol,
        "max_subdivisions": spec.max_subdivisions,
        "outer_cutoff": spec.outer_cutoff,
    })
}

fn run_json(run: &RunSettings) -> serde_json::Value {
    json!({
        "replications": run.reps,
        "seed": run.seed.value,
        "workers": run.workers,
        "burn_in": run.burn_in,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(super) enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub(super) struct MomentsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Moment order.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=20))]
    k: u32,
    /// Add quadrature values of Ψ(l) and their relative errors.
    #[arg(long)]
    verify: bool,
    /// Add Monte-Carlo estimates with standard errors.
    #[arg(long)]
    simulate: bool,
    /// Simulate n items instead of the limit.
    #[arg(long, value_parser = super::parse_count, requires = "simulate")]
    n: Option<u64>,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write PREFIX.json or PREFIX.csv plus PREFIX.manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Verification {
    psi_terms: Vec<Option<f64>>,
    rel_errors: Vec<Option<f64>>,
    value: Option<f64>,
    value_rel_error: Option<f64>,
}

#[derive(Serialize)]
struct MonteCarlo {
    horizon: Horizon,
    seed: u64,
    #[serde(flatten)]
    estimates: MomentEstimates,
}

#[derive(Serialize)]
struct MomentsReport<'a> {
    model: &'a Model,
    k: u32,
    #[serde(flatten)]
    moment: &'a MomentValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    verify: Option<Verification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulate: Option<MonteCarlo>,
}

fn moments(a: MomentsArgs, ctx: &mut Context) -> CliResult<()> {
    let started = now();
    let Resolved { config, model, quad } = a.common.resolve(true)?;
    let model = model.expect("model resolved");
    if !a.simulate && a.run.any_set() {
        return usage("--reps, --seed, --workers and --burn-in need --simulate");
    }
    let horizon = match a.n {
        Some(n) => Horizon::Exact { n: items(n)? },
        None => Horizon::Limit,
    };
    let run = a.simulate.then(|| a.run.resolve(&config, 100_000)).transpose()?;
    let mut failures = Failures::default();

    // analytic moments of every order up to k; finite orders form a prefix
    let by_order = (1..=a.k)
        .map(|j| limit_moment(&MomentRequest { model, k: j }))
        .collect::<Result<Vec<_>>>()?;
    let report_k = by_order.last().expect("k >= 1").clone();
    let finite_orders = by_order.iter().take_while(|m| m.finite).count() as u32;

    let psi_num: Vec<Option<f64>> = if a.verify {
        (1..=finite_orders)
            .map(|l| failures.take(&format!("Ψ({l}) quadrature"), psi_numeric(&model, l, &quad)))
            .collect::<CliResult<_>>()?
    } else {
        Vec::new()
    };
    let assemble = |j: u32| -> Option<f64> {
        if j > finite_orders {
            return None;
        }
        let row = stirling2_row(j as usize).ok()?;
        let mut acc = 0.0;
        for (a, v) in row.iter().zip(&psi_num) {
            acc += *a as f64 * (*v)?;
        }
        Some(acc)
    };

    let mc = match run {
        Some(run) => {
            let sample = sim::simulate(&model, horizon, &run.sim_config())?;
            match sim::estimate_moments(&sample.draws, a.k) {
                Ok(est) => Some(est),
                Err(Error::Numeric { message, .. }) => {
                    failures.0.push(format!("Monte-Carlo moments: {message}"));
                    None
                }
                Err(e) => return Err(e.into()),
            }
        }
        None => None,
    };

    let text = match a.format {
        Format::Json => {
            let verify = a.verify.then(|| {
                let psi_terms: Vec<Option<f64>> = (0..a.k as usize)
                    .map(|i| if report_k.finite { psi_num.get(i).copied().flatten() } else { None })
                    .collect();
                let rel_errors = psi_terms
                    .iter()
                    .zip(&report_k.psi_terms)
                    .map(|(n, e)| rel_error(*n, *e))
                    .collect();
                let value = assemble(a.k);
                Verification {
                    psi_terms,
                    rel_errors,
                    value,
                    value_rel_error: report_k.value.and_then(|v| rel_error(value, v)),
                }
            });
            let simulate = match (run, mc.clone()) {
                (Some(run), Some(estimates)) => Some(MonteCarlo {
                    horizon,
                    seed: run.seed.value,
                    estimates,
                }),
                _ => None,
            };
            let report = MomentsReport {
                model: &model,
                k: a.k,
                moment: &report_k,
                verify,
                simulate,
            };
            let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
            text.push('\n');
            text
        }
        Format::Csv => {
            let mut csv = Csv::new(&[
                "order",
                "finite",
                "psi",
                "psi_numeric",
                "psi_rel_error",
                "moment",
                "moment_numeric",
                "moment_rel_error",
                "moment_mc",
                "moment_mc_se",
            ]);
            for (i, m) in by_order.iter().enumerate() {
                let j = i as u32 + 1;
                let psi = *m.psi_terms.last().expect("k terms");
                let psi_n = psi_num.get(i).copied().flatten();
                let value_n = if a.verify { assemble(j) } else { None };
                csv.row(&[
                    j.to_string(),
                    m.finite.to_string(),
                    float(psi),
                    opt_float(psi_n),
                    opt_float(if psi.is_finite() { rel_error(psi_n, psi) } else { None }),
                    opt_float(m.value),
                    opt_float(value_n),
                    opt_float(m.value.and_then(|v| rel_error(value_n, v))),
                    opt_float(mc.as_ref().map(|e| e.moments[i])),
                    opt_float(mc.as_ref().map(|e| e.std_errors[i])),
                ]);
            }
            csv.into_string()
        }
    };
    let suffix = match a.format {
        Format::Json => ".json",
        Format::Csv => ".csv",
    };
    let params = json!({
        "model": model,
        "k": a.k,
        "verify": a.verify,
        "simulate": run.map(|r| json!({"horizon": horizon, "run": run_json(&r)})),
        "quad": quad_json(&quad),
    });
    let manifest = ctx.manifest("moments", params, run.map(|r| r.seed), started);
    ctx.emit(a.out.as_deref(), suffix, &text, manifest)?;
    failures.finish()
}

/// `lo:hi:count`, evenly spaced and inclusive.
fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::Usage(format!("expected LO:HI:COUNT, got {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count = super::parse_count(parts[2]).map_err(CliError::Usage)? as usize;
    Ok(linspace(lo, hi, count))
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

#[derive(Debug, Args)]
pub(super) struct LaplaceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated arguments s >= 0.
    #[arg(long = "s", value_delimiter = ',', allow_hyphen_values = true)]
    s: Vec<f64>,
    /// Evenly spaced grid LO:HI:COUNT, appended to --s.
    #[arg(long)]
    s_range: Option<String>,
    /// Comma-separated list sizes for the finite-n transform.
    #[arg(long, value_delimiter = ',', value_parser = super::parse_count)]
    n: Vec<u64>,
    /// Include the limiting transform (the default when no --n is given).
    #[arg(long)]
    limit: bool,
    /// Add Monte-Carlo columns with standard errors.
    #[arg(long)]
    mc: bool,
    #[command(flatten)]
    run: RunArgs,
    /// Write PREFIX.csv plus PREFIX.manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn laplace(a: LaplaceArgs, ctx: &mut Context) -> CliResult<()> {
    let started = now();
    let Resolved { config, model, quad } = a.common.resolve(true)?;
    let model = model.expect("model resolved");
    let mut grid = a.s.clone();
    if let Some(r) = &a.s_range {
        grid.extend(parse_grid(r)?);
    }
    if grid.is_empty() {
        return usage("give --s and/or --s-range");
    }
    if let Some(s) = grid.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
        return usage(format!("s must be finite and >= 0, got {s}"));
    }
    if !a.mc && a.run.any_set() {
        return usage("--reps, --seed, --workers and --burn-in need --mc");
    }
    let mut horizons: Vec<Option<usize>> = Vec::new();
    if a.limit || a.n.is_empty() {
        horizons.push(None);
    }
    for &n in &a.n {
        let n = items(n)?;
        if n > quad::MAX_FINITE_N {
            return usage(format!("finite-n transform supports n <= {}, got {n}", quad::MAX_FINITE_N));
        }
        horizons.push(Some(n));
    }
    let run = a.mc.then(|| a.run.resolve(&config, 100_000)).transpose()?;

    let label = |h: &Option<usize>| h.map_or("limit".to_string(), |n| format!("n{n}"));
    let mut header = vec!["s".to_string()];
    for h in &horizons {
        header.push(format!("phi_{}", label(h)));
        if run.is_some() {
            header.push(format!("mc_{}", label(h)));
            header.push(format!("mc_se_{}", label(h)));
        }
    }
    let draws = match run {
        Some(run) => horizons
            .iter()
            .map(|h| {
                let horizon = h.map_or(Horizon::Limit, |n| Horizon::Exact { n });
                Ok(sim::simulate(&model, horizon, &run.sim_config())?.draws)
            })
            .collect::<CliResult<Vec<_>>>()?,
        None => Vec::new(),
    };

    let mut failures = Failures::default();
    let mut csv = Csv::new(&header);
    for &s in &grid {
        let mut row = vec![float(s)];
        for (i, h) in horizons.iter().enumerate() {
            let what = format!("transform at s = {s}, {}", label(h));
            row.push(opt_float(failures.take(&what, laplace_value(&model, *h, s, &quad))?));
            if let Some(d) = draws.get(i) {
                let (m, se) = sim::empirical_laplace(d, s);
                row.push(float(m));
                row.push(float(se));
            }
        }
        csv.row(&row);
    }
    let params = json!({
        "model": model,
        "s": grid,
        "horizons": horizons.iter().map(label).collect::<Vec<_>>(),
        "mc": run.map(|r| run_json(&r)),
        "quad": quad_json(&quad),
    });
    let manifest = ctx.manifest("laplace", params, run.map(|r| r.seed), started);
    ctx.emit(a.out.as_deref(), ".csv", &csv.into_string(), manifest)?;
    failures.finish()
}

#[derive(Debug, Args)]
pub(super) struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of items.
    #[arg(long, value_parser = super::parse_count, conflicts_with = "limit")]
    n: Option<u64>,
    /// Draw from the n -> infinity law.
    #[arg(long)]
    limit: bool,
    /// Run the Move-to-Front chain instead of the exact stationary sampler.
    #[arg(long)]
    chain: bool,
    #[command(flatten)]
    run: RunArgs,
    /// Output prefix.
    #[arg(long, default_value = "mtfcost_simulate")]
    out: PathBuf,
}

fn simulate(a: SimulateArgs, ctx: &mut Context) -> CliResult<()> {
    let started = now();
    let Resolved { config, model, quad: _ } = a.common.resolve(true)?;
    let model = model.expect("model resolved");
    if a.chain && a.n.is_none() {
        return usage("--chain needs --n");
    }
    let horizon = match (a.n, a.limit) {
        (Some(n), false) if a.chain => Horizon::Chain { n: items(n)? },
        (Some(n), false) => Horizon::Exact { n: items(n)? },
        (None, true) => Horizon::Limit,
        _ => return usage("give exactly one of --n and --limit"),
    };
    if a.run.burn_in.is_some() && !a.chain {
        return usage("--burn-in needs --chain");
    }
    let run = a.run.resolve(&config, 100_000)?;
    let sample = sim::simulate(&model, horizon, &run.sim_config())?;

    let mut draws_csv = Vec::new();
    sim::export::write_draws_csv(&mut draws_csv, &sample.draws).map_err(|e| CliError::Io(e.to_string()))?;
    let summary = sim::export::summary_json(&sample);
    let mut files = Outputs::new(&a.out);
    files.file(".csv", std::str::from_utf8(&draws_csv).expect("ascii"))?;
    files.file(".summary.json", &summary)?;
    let params = json!({
        "model": model,
        "horizon": horizon,
        "run": run_json(&run),
    });
    files.manifest(ctx.manifest("simulate", params, Some(run.seed), started))?;
    if run.seed.source == "generated" {
        ctx.note(&format!("generated seed {}", run.seed.value));
    }
    ctx.print(&summary)
}

fn parse_range(text: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::Usage(format!("expected LO:HI, got {text:?}"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo <= hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

#[derive(Debug, Args)]
pub(super) struct SurfaceArgs {
    /// Moment order.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=2))]
    k: u32,
    /// Strength range LO:HI (LO > 0).
    #[arg(long, default_value = "0.2:10")]
    theta_range: String,
    /// Index range LO:HI [default: 0.1:0.4 for k = 1, 0.1:0.3 for k = 2].
    #[arg(long)]
    gamma_range: Option<String>,
    #[arg(long, default_value_t = 50, value_parser = super::parse_count)]
    theta_steps: u64,
    #[arg(long, default_value_t = 50, value_parser = super::parse_count)]
    gamma_steps: u64,
    /// Write PREFIX.csv plus PREFIX.manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn surface(a: SurfaceArgs, ctx: &mut Context) -> CliResult<()> {
    let started = now();
    let (t_lo, t_hi) = parse_range(&a.theta_range)?;
    let default_gamma = if a.k == 1 { "0.1:0.4" } else { "0.1:0.3" };
    let (g_lo, g_hi) = parse_range(a.gamma_range.as_deref().unwrap_or(default_gamma))?;
    if !(t_lo > 0.0 && t_hi.is_finite()) {
        return usage("theta range must lie in (0, inf)");
    }
    if g_lo < GAMMA_MIN || g_hi > GAMMA_MAX {
        return usage(format!("gamma range must lie in [{GAMMA_MIN}, {GAMMA_MAX}]"));
    }
    let thetas = linspace(t_lo, t_hi, a.theta_steps as usize);
    let gammas = linspace(g_lo, g_hi, a.gamma_steps as usize);
    let mut csv = Csv::new(&["theta", "gamma", "k", "finite", "moment"]);
    for &theta in &thetas {
        for &gamma in &gammas {
            let m = limit_moment(&MomentRequest {
                model: Model::PitmanYor { gamma, theta },
                k: a.k,
            })?;
            csv.row(&[
                float(theta),
                float(gamma),
                a.k.to_string(),
                m.finite.to_string(),
                float(m.value.unwrap_or(f64::INFINITY)),
            ]);
        }
    }
    let params = json!({
        "k": a.k,
        "theta": [t_lo, t_hi, a.theta_steps],
        "gamma": [g_lo, g_hi, a.gamma_steps],
    });
    let manifest = ctx.manifest("surface", params, None, started);
    ctx.emit(a.out.as_deref(), ".csv", &csv.into_string(), manifest)
}

#[derive(Debug, Args)]
pub(super) struct DiagnosticsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Order l of I_n(l).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=20))]
    l: u32,
    /// Comma-separated list sizes.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000", value_parser = super::parse_count)]
    n: Vec<u64>,
    /// Write PREFIX.csv plus PREFIX.manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Growth factor over the requested sizes above which the sequence is
/// reported as unbounded.
const GROWTH_FLAG: f64 = 1.5;

fn diagnostics(a: DiagnosticsArgs, ctx: &mut Context) -> CliResult<()> {
    let started = now();
    let Resolved { model, quad, .. } = a.common.resolve(true)?;
    let model = model.expect("model resolved");
    let Some(exponent) = exponent_of(&model) else {
        return usage("diagnostics need a single subordinator; --model py is a mixture");
    };
    let sizes = a.n.iter().map(|&n| items(n)).collect::<CliResult<Vec<_>>>()?;
    if let Some(n) = sizes.iter().find(|&&n| n <= a.l as usize) {
        return usage(format!("I_n(l) needs n > l, got n = {n}, l = {}", a.l));
    }
    let in_region = model.index().is_none_or(|g| g < finiteness_bound(a.l));

    let mut failures = Failures::default();
    let mut csv = Csv::new(&["n", "l", "value", "in_finite_region"]);
    let mut values = Vec::new();
    for &n in &sizes {
        let what = format!("I_{n}({})", a.l);
        let v = failures.take(&what, quad::integrability_diagnostic(&exponent, n, a.l, &quad))?;
        values.extend(v);
        csv.row(&[n.to_string(), a.l.to_string(), opt_float(v), in_region.to_string()]);
    }
    let params = json!({
        "model": model,
        "l": a.l,
        "n": sizes,
        "quad": quad_json(&quad),
    });
    let manifest = ctx.manifest("diagnostics", params, None, started);
    ctx.emit(a.out.as_deref(), ".csv", &csv.into_string(), manifest)?;

    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.len() == 1 {
        ctx.note("one size only; pass several --n values to see a trend");
    } else if !values.is_empty() {
        let ratio = hi / lo;
        let verdict = if !failures.0.is_empty() || !hi.is_finite() {
            "quadrature did not settle; sup_n I_n(l) may be infinite"
        } else if ratio < GROWTH_FLAG {
            "sequence looks bounded"
        } else {
            "sequence grows; sup_n I_n(l) may be infinite"
        };
        ctx.note(&format!("max/min over n = {ratio:.4}: {verdict}"));
    }
    if !in_region {
        ctx.note(&format!("index >= 1/(l+1) = {}: outside the finite-moment region", finiteness_bound(a.l)));
    }
    failures.finish()
}
