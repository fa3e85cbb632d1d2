//! The `ggc` command line: reproducible verification runs over `ggc-core`,
//! writing CSV tables and a JSON report for each run.
//!
//! Exit codes: 0 success or pass, 1 I/O failure, 2 invalid input,
//! 3 quadrature failure, 4 a check failed, 5 a check was inconclusive.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ggc_core::gammaconv::{laplace_exact, Density, GammaConvolution, PowerLaplace, PowerLaw};
use ggc_core::monotone::{
    cm_check_with, hcm_check, log_grid, ratio_spread, remark3_row, uniform_transform, CmOptions, CmReport,
    HcmConfig, Remark3Normalization, Remark3Row, Verdict,
};
use ggc_core::output::{format_g17, write_rows};
use ggc_core::stochastics::{
    exp_limit_pair, ks_distance, sample_ggc, sample_power_product, sample_sym_eggc, Combine, Sample, Seed,
    DEFAULT_DRAWS,
};
use ggc_core::QuadratureConfig;

mod grid;
pub mod suite;

pub use grid::parse_grid;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] ggc_core::Error),
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Core(e) if e.is_quadrature_failure() => 3,
            CliError::Core(_) => 2,
            CliError::Io { .. } => 1,
        }
    }
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    Checked(Verdict),
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Done | Status::Checked(Verdict::Pass) => 0,
            Status::Checked(Verdict::Fail) => 4,
            Status::Checked(Verdict::Inconclusive) => 5,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ggc", version, about = "Numerical laboratory for generalized gamma convolutions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Density of a gamma convolution on a grid
    Density(DensityArgs),
    /// Laplace transform of X or of X^q on a grid
    Laplace(LaplaceArgs),
    /// Complete monotonicity check of a transform
    CmTest(CmTestArgs),
    /// Hyperbolic complete monotonicity check of a transform
    HcmTest(HcmTestArgs),
    /// Two-gamma integral against the Bessel product
    Remark3(Remark3Args),
    /// Draw a seeded sample
    Sample(SampleArgs),
    /// Distance between the power approximation and the exponential
    LimitCheck(LimitArgs),
    /// HCM checks over a corpus of models and powers, plus sampler checks
    PowerSuite(SuiteArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// CSV destination (stdout when absent); the JSON report is written next
    /// to it with extension .json
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Explicit JSON report path (stderr when neither this nor --out is given)
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// start:stop:count, a comma separated list, or "" for none
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    /// Relative tolerance of the quadrature
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct LaplaceArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    /// Power q >= 1; the exact transform of X is used when absent
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    /// (1 − e^{−s})/s, the transform of the uniform law on [0, 1]
    Uniform,
    /// e^{−s²}, not completely monotone
    Gaussian,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// Model file; required unless --builtin is given
    #[arg(long, required_unless_present = "builtin", conflicts_with = "builtin")]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 8)]
    pub max_order: usize,
    /// Relative tolerance of the monotonicity test
    #[arg(long, default_value_t = 1e-6)]
    pub check_tol: f64,
}

#[derive(Debug, Args)]
pub struct CmTestArgs {
    #[command(flatten)]
    pub transform: TransformArgs,
    /// Window and point count as start:stop:count
    #[arg(long, default_value = "0.1:10:64")]
    pub grid: String,
    /// Report destination (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HcmTestArgs {
    #[command(flatten)]
    pub transform: TransformArgs,
    /// Grid of u values (default: 9 log-spaced points on [0.01, 100])
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    HalfShift,
    UnitRates,
}

impl From<NormalizationArg> for Remark3Normalization {
    fn from(n: NormalizationArg) -> Self {
        match n {
            NormalizationArg::HalfShift => Remark3Normalization::HalfShift,
            NormalizationArg::UnitRates => Remark3Normalization::UnitRates,
        }
    }
}

#[derive(Debug, Args)]
pub struct Remark3Args {
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value = "0.5:2:16")]
    pub grid: String,
    #[arg(long, value_enum, default_value_t = NormalizationArg::HalfShift)]
    pub normalization: NormalizationArg,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleKind {
    /// Draws of the model itself
    Ggc,
    /// Draws of X^q
    Power,
    /// Draws of Y^{1/alpha}·Z with Z standard normal
    SymEggc,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = SampleKind::Ggc)]
    pub kind: SampleKind,
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Values of r in (0, 1)
    #[arg(long, default_value = "0.3,0.1,0.03,0.01")]
    pub grid: String,
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest acceptable distance at the smallest r
    #[arg(long, default_value_t = 0.01)]
    pub threshold: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    /// JSON array of models; the built-in corpus is used when absent
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Comma separated powers
    #[arg(long, default_value = "1.5,2,3")]
    pub qs: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    pub n: usize,
    /// Add the uniform transform as a negative control row
    #[arg(long)]
    pub inject_uniform: bool,
    /// Skip the sampler checks
    #[arg(long)]
    pub hcm_only: bool,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 8)]
    pub max_order: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub check_tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn run(cli: Cli) -> Result<Status, CliError> {
    match cli.command {
        Command::Density(a) => cmd_density(&a),
        Command::Laplace(a) => cmd_laplace(&a),
        Command::CmTest(a) => cmd_cm_test(&a),
        Command::HcmTest(a) => cmd_hcm_test(&a),
        Command::Remark3(a) => cmd_remark3(&a),
        Command::Sample(a) => cmd_sample(&a),
        Command::LimitCheck(a) => cmd_limit_check(&a),
        Command::PowerSuite(a) => suite::cmd_power_suite(&a),
    }
}

pub(crate) fn read_model(path: &Path) -> Result<GammaConvolution, CliError> {
    let text = read_text(path)?;
    Ok(GammaConvolution::from_json(&text)?)
}

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

pub(crate) fn quadrature(tol: f64) -> Result<QuadratureConfig, CliError> {
    let cfg = QuadratureConfig::default().with_rel_tol(tol);
    cfg.validate()?;
    Ok(cfg)
}

pub(crate) fn power(q: f64) -> Result<PowerLaw, CliError> {
    Ok(PowerLaw::new(q)?)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn write_stdout(bytes: &[u8]) -> Result<(), CliError> {
    std::io::stdout()
        .lock()
        .write_all(bytes)
        .map_err(|source| CliError::Io { path: "stdout".into(), source })
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text.into_bytes()
}

/// Writes a table and its report according to the output flags.
pub(crate) fn emit<T: Serialize>(output: &OutputArgs, csv: &[u8], report: &T) -> Result<(), CliError> {
    let json = to_json(report);
    match &output.out {
        Some(path) => write_file(path, csv)?,
        None => write_stdout(csv)?,
    }
    match (&output.report, &output.out) {
        (Some(path), _) => write_file(path, &json),
        (None, Some(out)) => write_file(&out.with_extension("json"), &json),
        (None, None) => std::io::stderr()
            .lock()
            .write_all(&json)
            .map_err(|source| CliError::Io { path: "stderr".into(), source }),
    }
}

/// Writes a report that is the primary output of a command.
pub(crate) fn emit_report<T: Serialize>(out: &Option<PathBuf>, report: &T) -> Result<(), CliError> {
    let json = to_json(report);
    match out {
        Some(path) => write_file(path, &json),
        None => write_stdout(&json),
    }
}

pub(crate) fn csv_bytes(header: &[&str], rows: &[Vec<f64>]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_rows(&mut buf, header, rows).expect("writing to memory succeeds");
    buf
}

#[derive(Serialize)]
struct DensityReport<'a> {
    command: &'static str,
    model: &'a GammaConvolution,
    tol: f64,
    route: &'static str,
    points: usize,
}

fn cmd_density(a: &DensityArgs) -> Result<Status, CliError> {
    let gc = read_model(&a.model)?;
    let grid = parse_grid(&a.grid)?;
    let cfg = quadrature(a.tol)?;
    if let Some(&x) = grid.iter().find(|&&x| x <= gc.shift()) {
        return Err(CliError::Validation(format!(
            "grid point {x} is not inside the support (left extremity {})",
            gc.shift()
        )));
    }
    let density = Density::new(&gc, &cfg)?;
    let rows = grid
        .iter()
        .map(|&x| Ok(vec![x, density.density(x)?]))
        .collect::<Result<Vec<_>, CliError>>()?;
    let route = match (gc.len(), density.is_direct()) {
        (1, _) => "gamma",
        (_, true) => "direct",
        (_, false) => "iterated",
    };
    let report = DensityReport { command: "density", model: &gc, tol: a.tol, route, points: rows.len() };
    emit(&a.output, &csv_bytes(&["x", "density"], &rows), &report)?;
    Ok(Status::Done)
}

#[derive(Serialize)]
struct LaplaceReport<'a> {
    command: &'static str,
    model: &'a GammaConvolution,
    q: Option<f64>,
    method: &'static str,
    tol: f64,
    points: usize,
}

fn cmd_laplace(a: &LaplaceArgs) -> Result<Status, CliError> {
    let gc = read_model(&a.model)?;
    let grid = parse_grid(&a.grid)?;
    let cfg = quadrature(a.tol)?;
    if let Some(&s) = grid.iter().find(|&&s| s < 0.0) {
        return Err(CliError::Validation(format!("transform arguments must be >= 0, got {s}")));
    }
    let (rows, method) = match a.q {
        None => (
            grid.iter().map(|&s| Ok(vec![s, laplace_exact(&gc, s)?])).collect::<Result<Vec<_>, CliError>>()?,
            "closed form",
        ),
        Some(q) => {
            let transform = PowerLaplace::new(&gc, power(q)?, &cfg)?;
            (
                grid.iter().map(|&s| Ok(vec![s, transform.eval(s)?])).collect::<Result<Vec<_>, CliError>>()?,
                "quadrature against the density",
            )
        }
    };
    let report = LaplaceReport { command: "laplace", model: &gc, q: a.q, method, tol: a.tol, points: rows.len() };
    emit(&a.output, &csv_bytes(&["s", "laplace"], &rows), &report)?;
    Ok(Status::Done)
}

/// A transform under test: a model's (power) Laplace transform or a built-in.
pub enum Transform {
    Exact(GammaConvolution),
    Power(PowerLaplace),
    Builtin(Builtin),
}

impl Transform {
    pub fn from_args(a: &TransformArgs) -> Result<(Self, String), CliError> {
        if let Some(b) = a.builtin {
            if a.q.is_some() {
                return Err(CliError::Validation("--q applies to model transforms only".into()));
            }
            let name = match b {
                Builtin::Uniform => "builtin uniform",
                Builtin::Gaussian => "builtin gaussian",
            };
            return Ok((Transform::Builtin(b), name.into()));
        }
        let path = a.model.as_ref().expect("clap requires --model without --builtin");
        let gc = read_model(path)?;
        Transform::for_model(gc, a.q, a.tol)
    }

    pub fn for_model(gc: GammaConvolution, q: Option<f64>, tol: f64) -> Result<(Self, String), CliError> {
        let label = gc.to_json();
        match q {
            None => Ok((Transform::Exact(gc), label)),
            Some(q) => {
                let transform = PowerLaplace::new(&gc, power(q)?, &quadrature(tol)?)?;
                Ok((Transform::Power(transform), format!("{label} to the power {q}")))
            }
        }
    }

    pub fn eval(&self, s: f64) -> ggc_core::Result<f64> {
        match self {
            Transform::Exact(gc) => laplace_exact(gc, s),
            Transform::Power(p) => p.eval(s),
            Transform::Builtin(Builtin::Uniform) => uniform_transform(s),
            Transform::Builtin(Builtin::Gaussian) => Ok((-s * s).exp()),
        }
    }

    /// Relative error of one evaluation, fed to the noise model of the checks.
    pub fn eval_rel_error(&self) -> f64 {
        match self {
            Transform::Power(p) => p.rel_tol(),
            _ => 0.0,
        }
    }
}

#[derive(Serialize)]
struct CheckReport<'a> {
    command: &'static str,
    transform: &'a str,
    #[serde(flatten)]
    report: &'a CmReport,
}

fn cmd_cm_test(a: &CmTestArgs) -> Result<Status, CliError> {
    let (transform, label) = Transform::from_args(&a.transform)?;
    let grid = parse_grid(&a.grid)?;
    let (window, points) = match grid[..] {
        [lo, .., hi] => ((lo, hi), grid.len()),
        _ => return Err(CliError::Validation("the CM window needs at least two grid points".into())),
    };
    let opts = CmOptions {
        window,
        points,
        max_order: a.transform.max_order,
        rel_tol: a.transform.check_tol,
        eval_rel_error: transform.eval_rel_error(),
    };
    let report = cm_check_with(|s| transform.eval(s), &opts)?;
    emit_report(&a.out, &CheckReport { command: "cm-test", transform: &label, report: &report })?;
    Ok(Status::Checked(report.verdict))
}

pub fn hcm_config(max_order: usize, check_tol: f64, eval_rel_error: f64) -> HcmConfig {
    HcmConfig { max_order, rel_tol: check_tol, eval_rel_error, ..HcmConfig::default() }
}

fn cmd_hcm_test(a: &HcmTestArgs) -> Result<Status, CliError> {
    let (transform, label) = Transform::from_args(&a.transform)?;
    let mut cfg = hcm_config(a.transform.max_order, a.transform.check_tol, transform.eval_rel_error());
    if let Some(spec) = &a.grid {
        cfg.u_grid = parse_grid(spec)?;
    }
    cfg.validate()?;
    let report = hcm_check(|s| transform.eval(s), &cfg)?;
    emit_report(&a.out, &CheckReport { command: "hcm-test", transform: &label, report: &report })?;
    Ok(Status::Checked(report.verdict))
}

#[derive(Serialize)]
struct Remark3Report {
    command: &'static str,
    beta: f64,
    normalization: Remark3Normalization,
    tol: f64,
    /// Mean lhs/rhs ratio at β = 1 over the same grid.
    calibration_constant: f64,
    /// Mean ratio for the requested β.
    ratio_mean: f64,
    /// Largest relative deviation of the ratios from their mean.
    ratio_spread: f64,
    rows: Vec<Remark3Row>,
}

fn remark3_rows(beta: f64, grid: &[f64], n: Remark3Normalization, cfg: &QuadratureConfig) -> Result<Vec<Remark3Row>, CliError> {
    grid.iter().map(|&y| Ok(remark3_row(beta, y, n, cfg)?)).collect()
}

fn mean_ratio(rows: &[Remark3Row]) -> f64 {
    rows.iter().map(|r| r.ratio).sum::<f64>() / rows.len() as f64
}

fn cmd_remark3(a: &Remark3Args) -> Result<Status, CliError> {
    let grid = parse_grid(&a.grid)?;
    if grid.is_empty() {
        return Err(CliError::Validation("the y grid is empty".into()));
    }
    if !(a.beta > 0.0 && a.beta.is_finite()) {
        return Err(CliError::Validation(format!("beta must be positive, got {}", a.beta)));
    }
    let cfg = quadrature(a.tol)?;
    let normalization = a.normalization.into();
    let rows = remark3_rows(a.beta, &grid, normalization, &cfg)?;
    let calibration = if a.beta == 1.0 { rows.clone() } else { remark3_rows(1.0, &grid, normalization, &cfg)? };
    let table: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.y, r.lhs, r.rhs, r.ratio]).collect();
    let report = Remark3Report {
        command: "remark3",
        beta: a.beta,
        normalization,
        tol: a.tol,
        calibration_constant: mean_ratio(&calibration),
        ratio_mean: mean_ratio(&rows),
        ratio_spread: ratio_spread(&rows),
        rows,
    };
    emit(&a.output, &csv_bytes(&["y", "lhs", "rhs", "ratio"], &table), &report)?;
    Ok(Status::Done)
}

#[derive(Serialize)]
struct SampleReport<'a> {
    command: &'static str,
    provenance: &'a str,
    n: usize,
    seed: u64,
    mean: f64,
    mean_standard_error: f64,
    variance: f64,
    variance_standard_error: f64,
}

fn cmd_sample(a: &SampleArgs) -> Result<Status, CliError> {
    let gc = read_model(&a.model)?;
    let seed = Seed(a.seed);
    let sample = match a.kind {
        SampleKind::Ggc => sample_ggc(&gc, a.n, seed)?,
        SampleKind::Power => {
            let q = a.q.ok_or_else(|| CliError::Validation("--kind power needs --q".into()))?;
            sample_power_product(&[gc], &[power(q)?], Combine::Sum, a.n, seed)?
        }
        SampleKind::SymEggc => {
            let alpha = a.alpha.ok_or_else(|| CliError::Validation("--kind sym-eggc needs --alpha".into()))?;
            sample_sym_eggc(&gc, alpha, a.n, seed)?
        }
    };
    let mut csv = Vec::new();
    sample.write_csv(&mut csv).expect("writing to memory succeeds");
    emit(&a.output, &csv, &sample_report(&sample, a.seed))?;
    Ok(Status::Done)
}

fn sample_report(s: &Sample, seed: u64) -> SampleReport<'_> {
    SampleReport {
        command: "sample",
        provenance: s.provenance(),
        n: s.len(),
        seed,
        mean: s.mean(),
        mean_standard_error: s.mean_standard_error(),
        variance: s.variance(),
        variance_standard_error: s.variance_standard_error(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub command: &'static str,
    pub model: GammaConvolution,
    pub n: usize,
    pub seed: u64,
    pub r: Vec<f64>,
    pub ks: Vec<f64>,
    pub decreasing: bool,
    pub threshold: f64,
    pub final_below_threshold: bool,
    pub verdict: Verdict,
}

/// KS distances between the coupled power and exponential samples for each
/// r, in the given order, with the monotonicity verdict.
pub fn limit_check(gc: &GammaConvolution, rs: &[f64], n: usize, seed: u64, threshold: f64) -> Result<LimitReport, CliError> {
    if rs.is_empty() {
        return Err(CliError::Validation("the r grid is empty".into()));
    }
    let ks = rs
        .iter()
        .map(|&r| {
            let (p, e) = exp_limit_pair(gc, r, n, Seed(seed))?;
            Ok(ks_distance(&p, &e))
        })
        .collect::<Result<Vec<f64>, CliError>>()?;
    let decreasing = ks.windows(2).all(|w| w[1] < w[0]);
    let final_below_threshold = ks[ks.len() - 1] < threshold;
    let verdict = if decreasing && final_below_threshold { Verdict::Pass } else { Verdict::Fail };
    Ok(LimitReport {
        command: "limit-check",
        model: gc.clone(),
        n,
        seed,
        r: rs.to_vec(),
        ks,
        decreasing,
        threshold,
        final_below_threshold,
        verdict,
    })
}

fn cmd_limit_check(a: &LimitArgs) -> Result<Status, CliError> {
    let gc = read_model(&a.model)?;
    let rs = parse_grid(&a.grid)?;
    let report = limit_check(&gc, &rs, a.n, a.seed, a.threshold)?;
    let rows: Vec<Vec<f64>> = report.r.iter().zip(&report.ks).map(|(&r, &d)| vec![r, d]).collect();
    emit(&a.output, &csv_bytes(&["r", "ks"], &rows), &report)?;
    Ok(Status::Checked(report.verdict))
}

/// Compact label like `0.5@1+1.5@2` (shape@rate terms, then `+shift` if any).
pub fn model_label(gc: &GammaConvolution) -> String {
    let mut terms: Vec<String> =
        gc.components().iter().map(|c| format!("{}@{}", format_g17(c.shape()), format_g17(c.rate()))).collect();
    if gc.shift() > 0.0 {
        terms.push(format!("shift {}", format_g17(gc.shift())));
    }
    terms.join("+")
}

/// The u grid used by hcm-test when --grid is absent.
pub fn default_u_grid() -> Vec<f64> {
    log_grid(1e-2, 1e2, 9)
}
