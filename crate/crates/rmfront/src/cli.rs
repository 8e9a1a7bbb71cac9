//! Command-line driver: flat TOML configuration with command-line overrides,
//! the front / spectrum / bounds / Evans pipelines, deterministic parameter
//! sweeps, and flat-file emission (columnar text with a JSON header line,
//! JSON summaries, CSV for sweeps).

use crate::bounds::{self, BoundReport, BoundsError, SupNorms};
use crate::evans::{self, EvalOptions, EvansError, EvansResult};
use crate::front::{self, FrontError, FrontOptions, FrontProfile, FrontRegime};
use crate::kpp::{self, KppError};
use crate::model::{ModelError, ModelParams};
use crate::spectrum::{self, SpectralCurve, SpectrumError, WeightInterval};
use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cli/config: {msg}")]
    Config { msg: String },
    #[error("cli/io: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Front(#[from] FrontError),
    #[error(transparent)]
    Evans(#[from] EvansError),
    #[error(transparent)]
    Kpp(#[from] KppError),
}

/// Exit-code contract: 0 success, 2 configuration or validation failure,
/// 3 numerical failure (front continuation, winding resolution).
impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. }
            | CliError::Io { .. }
            | CliError::Model(_)
            | CliError::Spectrum(_)
            | CliError::Bounds(_) => 2,
            CliError::Front(e) => front_exit(e),
            CliError::Evans(e) => evans_exit(e),
            CliError::Kpp(e) => kpp_exit(e),
        }
    }
}

fn front_exit(e: &FrontError) -> i32 {
    match e {
        FrontError::Invalid { .. }
        | FrontError::SubcriticalSpeed { .. }
        | FrontError::Model(_) => 2,
        _ => 3,
    }
}

fn evans_exit(e: &EvansError) -> i32 {
    match e {
        EvansError::Invalid { .. } => 2,
        _ => 3,
    }
}

fn kpp_exit(e: &KppError) -> i32 {
    match e {
        KppError::Invalid { .. }
        | KppError::Domain { .. }
        | KppError::Subcritical { .. }
        | KppError::Model(_) => 2,
        KppError::Positivity { .. } => 3,
        KppError::Front(f) => front_exit(f),
        KppError::Evans(v) => evans_exit(v),
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config { msg: msg.into() }
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SigmaSpec {
    /// Midpoint of the admissible weight interval.
    Auto,
    /// The Sattinger choice c/2.
    Sattinger,
    Value(f64),
}

impl SigmaSpec {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "auto" => Ok(SigmaSpec::Auto),
            "sattinger" => Ok(SigmaSpec::Sattinger),
            _ => s.parse::<f64>().map(SigmaSpec::Value).map_err(|_| {
                config_err(format!(
                    "sigma must be a number, \"auto\" or \"sattinger\", got {s:?}"
                ))
            }),
        }
    }

    fn describe(&self) -> String {
        match self {
            SigmaSpec::Auto => "auto".into(),
            SigmaSpec::Sattinger => "sattinger".into(),
            SigmaSpec::Value(v) => format!("{v}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LengthSpec {
    Auto,
    Value(f64),
}

impl LengthSpec {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "auto" => Ok(LengthSpec::Auto),
            _ => s.parse::<f64>().map(LengthSpec::Value).map_err(|_| {
                config_err(format!("half_length must be a number or \"auto\", got {s:?}"))
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sampling {
    Grid,
    Lhs,
}

impl Sampling {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "grid" => Ok(Sampling::Grid),
            "lhs" => Ok(Sampling::Lhs),
            _ => Err(config_err(format!(
                "sampling must be \"grid\" or \"lhs\", got {s:?}"
            ))),
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            Sampling::Grid => "grid",
            Sampling::Lhs => "lhs",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SweepRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl SweepRange {
    fn value(&self, i: usize) -> f64 {
        if self.count <= 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * (i as f64) / ((self.count - 1) as f64)
        }
    }

    fn check(&self, name: &str) -> Result<(), CliError> {
        if self.count == 0 {
            return Err(config_err(format!("{name} sweep count must be at least 1")));
        }
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo > self.hi {
            return Err(config_err(format!(
                "{name} sweep range must satisfy lo <= hi, got ({}, {})",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Fully resolved run configuration: defaults, overlaid by the TOML file,
/// overlaid by command-line flags.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub alpha: f64,
    pub eta: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub c: f64,
    pub sigma: SigmaSpec,
    pub half_length: LengthSpec,
    pub nodes: usize,
    pub tol: f64,
    pub n_min: usize,
    pub out: PathBuf,
    pub seed: u64,
    pub jobs: usize,
    pub sampling: Sampling,
    pub samples: usize,
    pub eta_range: SweepRange,
    pub alpha_range: SweepRange,
    pub c_range: SweepRange,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: 0.5,
            eta: 2.0,
            delta: 0.1,
            epsilon: 0.05,
            c: 1.5,
            sigma: SigmaSpec::Auto,
            half_length: LengthSpec::Auto,
            nodes: 2001,
            tol: 1e-8,
            n_min: 64,
            out: PathBuf::from("out"),
            seed: 0,
            jobs: 0,
            sampling: Sampling::Grid,
            samples: 27,
            eta_range: SweepRange {
                lo: 2.0,
                hi: 3.0,
                count: 10,
            },
            alpha_range: SweepRange {
                lo: 0.1,
                hi: 0.8,
                count: 8,
            },
            c_range: SweepRange {
                lo: 1.0,
                hi: 2.0,
                count: 11,
            },
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> Result<ModelParams, CliError> {
        Ok(ModelParams::new(
            self.alpha,
            self.eta,
            self.delta,
            self.epsilon,
            self.c,
        )?)
    }

    pub fn front_options(&self) -> FrontOptions {
        FrontOptions {
            half_length: match self.half_length {
                LengthSpec::Auto => None,
                LengthSpec::Value(v) => Some(v),
            },
            n_nodes: self.nodes,
            tol: self.tol,
            ..FrontOptions::default()
        }
    }

    fn resolve_sigma(&self, lo: f64, hi: f64) -> f64 {
        match self.sigma {
            SigmaSpec::Auto => 0.5 * (lo + hi),
            SigmaSpec::Sattinger => 0.5 * self.c,
            SigmaSpec::Value(v) => v,
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(config_err(format!(
                "tol must be positive and finite, got {}",
                self.tol
            )));
        }
        self.eta_range.check("eta")?;
        self.alpha_range.check("alpha")?;
        self.c_range.check("c")?;
        Ok(())
    }
}

/// Flat key schema of the TOML config; every key optional, unknown keys
/// rejected so typos surface as configuration errors.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    alpha: Option<f64>,
    eta: Option<f64>,
    delta: Option<f64>,
    epsilon: Option<f64>,
    c: Option<f64>,
    sigma: Option<toml::Value>,
    half_length: Option<toml::Value>,
    nodes: Option<usize>,
    tol: Option<f64>,
    n_min: Option<usize>,
    out: Option<String>,
    seed: Option<u64>,
    jobs: Option<usize>,
    sampling: Option<String>,
    samples: Option<usize>,
    eta_lo: Option<f64>,
    eta_hi: Option<f64>,
    eta_count: Option<usize>,
    alpha_lo: Option<f64>,
    alpha_hi: Option<f64>,
    alpha_count: Option<usize>,
    c_lo: Option<f64>,
    c_hi: Option<f64>,
    c_count: Option<usize>,
}

fn toml_number_or(v: &toml::Value, what: &str) -> Result<Option<f64>, CliError> {
    match v {
        toml::Value::Float(x) => Ok(Some(*x)),
        toml::Value::Integer(x) => Ok(Some(*x as f64)),
        toml::Value::String(_) => Ok(None),
        _ => Err(config_err(format!(
            "{what} must be a number or a string, got {v}"
        ))),
    }
}

fn apply_file(cfg: &mut RunConfig, text: &str) -> Result<(), CliError> {
    let file: FileConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
    macro_rules! take {
        ($field:ident) => {
            if let Some(v) = file.$field {
                cfg.$field = v;
            }
        };
    }
    take!(alpha);
    take!(eta);
    take!(delta);
    take!(epsilon);
    take!(c);
    take!(nodes);
    take!(tol);
    take!(n_min);
    take!(seed);
    take!(jobs);
    take!(samples);
    if let Some(v) = &file.sigma {
        cfg.sigma = match toml_number_or(v, "sigma")? {
            Some(x) => SigmaSpec::Value(x),
            None => SigmaSpec::parse(v.as_str().unwrap())?,
        };
    }
    if let Some(v) = &file.half_length {
        cfg.half_length = match toml_number_or(v, "half_length")? {
            Some(x) => LengthSpec::Value(x),
            None => LengthSpec::parse(v.as_str().unwrap())?,
        };
    }
    if let Some(v) = file.out {
        cfg.out = PathBuf::from(v);
    }
    if let Some(v) = &file.sampling {
        cfg.sampling = Sampling::parse(v)?;
    }
    macro_rules! range {
        ($range:ident, $lo:ident, $hi:ident, $count:ident) => {
            if let Some(v) = file.$lo {
                cfg.$range.lo = v;
            }
            if let Some(v) = file.$hi {
                cfg.$range.hi = v;
            }
            if let Some(v) = file.$count {
                cfg.$range.count = v;
            }
        };
    }
    range!(eta_range, eta_lo, eta_hi, eta_count);
    range!(alpha_range, alpha_lo, alpha_hi, alpha_count);
    range!(c_range, c_lo, c_hi, c_count);
    Ok(())
}

#[derive(Debug, Parser)]
#[command(
    name = "rmfront",
    version,
    about = "Traveling fronts of a diffusive predator-prey model and their \
             spectral stability in exponentially weighted spaces"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Solve the front profile; write the columnar profile and a summary
    Front(CommonArgs),
    /// Emit essential-spectrum branch curves and the weight interval
    Spectrum(CommonArgs),
    /// Compute eigenvalue-magnitude bounds and the contour radius
    Bounds(CommonArgs),
    /// Count point spectrum inside the bound contour by Evans winding
    Evans(CommonArgs),
    /// Sweep parameter ranges; write CSV rows and a JSON summary
    Sweep(CommonArgs),
    /// Compare full and reduced weighted Evans winding counts
    KppCompare(CommonArgs),
    /// Verify built-in reference values and a quick reduced front solve
    Selftest(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML config file with the flat key schema
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for emitted files
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (0 uses the library default)
    #[arg(long)]
    jobs: Option<usize>,
    /// Weight exponent: "auto" (interval midpoint), "sattinger" (c/2), or a number
    #[arg(long)]
    sigma: Option<String>,
    /// Force epsilon = 0 (reduced slow-manifold regime)
    #[arg(long = "epsilon-zero")]
    epsilon_zero: bool,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// Domain half-length: "auto" or a number
    #[arg(long = "half-length")]
    half_length: Option<String>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Minimum contour sample count
    #[arg(long = "n-min")]
    n_min: Option<usize>,
    /// Seed for randomized sweep sampling
    #[arg(long)]
    seed: Option<u64>,
    /// Sweep sampling scheme: "grid" or "lhs"
    #[arg(long)]
    sampling: Option<String>,
    /// Case count for lhs sampling
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long = "eta-lo")]
    eta_lo: Option<f64>,
    #[arg(long = "eta-hi")]
    eta_hi: Option<f64>,
    #[arg(long = "eta-count")]
    eta_count: Option<usize>,
    #[arg(long = "alpha-lo")]
    alpha_lo: Option<f64>,
    #[arg(long = "alpha-hi")]
    alpha_hi: Option<f64>,
    #[arg(long = "alpha-count")]
    alpha_count: Option<usize>,
    #[arg(long = "c-lo")]
    c_lo: Option<f64>,
    #[arg(long = "c-hi")]
    c_hi: Option<f64>,
    #[arg(long = "c-count")]
    c_count: Option<usize>,
}

fn build_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        apply_file(&mut cfg, &text)?;
    }
    macro_rules! take {
        ($field:ident) => {
            if let Some(v) = args.$field {
                cfg.$field = v;
            }
        };
    }
    take!(alpha);
    take!(eta);
    take!(delta);
    take!(epsilon);
    take!(c);
    take!(nodes);
    take!(tol);
    take!(n_min);
    take!(seed);
    take!(jobs);
    take!(samples);
    if let Some(s) = &args.sigma {
        cfg.sigma = SigmaSpec::parse(s)?;
    }
    if let Some(s) = &args.half_length {
        cfg.half_length = LengthSpec::parse(s)?;
    }
    if let Some(s) = &args.sampling {
        cfg.sampling = Sampling::parse(s)?;
    }
    if let Some(p) = &args.out {
        cfg.out = p.clone();
    }
    macro_rules! range {
        ($range:ident, $lo:ident, $hi:ident, $count:ident) => {
            if let Some(v) = args.$lo {
                cfg.$range.lo = v;
            }
            if let Some(v) = args.$hi {
                cfg.$range.hi = v;
            }
            if let Some(v) = args.$count {
                cfg.$range.count = v;
            }
        };
    }
    range!(eta_range, eta_lo, eta_hi, eta_count);
    range!(alpha_range, alpha_lo, alpha_hi, alpha_count);
    range!(c_range, c_lo, c_hi, c_count);
    if args.epsilon_zero {
        cfg.epsilon = 0.0;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Entry point for the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (args, dispatch): (&CommonArgs, fn(&RunConfig) -> Result<(), CliError>) = match &cli.cmd {
        Cmd::Front(a) => (a, cmd_front),
        Cmd::Spectrum(a) => (a, cmd_spectrum),
        Cmd::Bounds(a) => (a, cmd_bounds),
        Cmd::Evans(a) => (a, cmd_evans),
        Cmd::Sweep(a) => (a, cmd_sweep),
        Cmd::KppCompare(a) => (a, cmd_kpp_compare),
        Cmd::Selftest(a) => (a, cmd_selftest),
    };
    let cfg = match build_config(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    match dispatch(&cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| config_err(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_text(dir, name, &text)
}

#[derive(Serialize)]
struct FrontSummary<'a> {
    params: &'a ModelParams,
    regime: FrontRegime,
    half_length: f64,
    n_nodes: usize,
    residual: f64,
    endpoint_err_left: f64,
    endpoint_err_right: f64,
    decay_rate_plus: f64,
    tail_slope: Option<f64>,
    checks: &'a front::FrontBoundsReport,
    sup_norms: Option<SupNorms>,
    f_u_max: Option<f64>,
}

fn cmd_front(cfg: &RunConfig) -> Result<(), CliError> {
    let p = cfg.params()?;
    let prof = front::solve_front(&p, &cfg.front_options())?;
    let report = front::check_front_bounds(&prof);
    let sups = front::sup_norms(&prof).ok();
    let summary = FrontSummary {
        params: &prof.params,
        regime: prof.regime,
        half_length: prof.half_length,
        n_nodes: prof.n_nodes(),
        residual: prof.residual,
        endpoint_err_left: prof.endpoint_err_left,
        endpoint_err_right: prof.endpoint_err_right,
        decay_rate_plus: prof.decay_rate_plus,
        tail_slope: report.tail_slope,
        checks: &report,
        sup_norms: sups.map(|(s, _)| s),
        f_u_max: sups.map(|(_, m)| m),
    };
    let profile_path = write_text(&cfg.out, "front_profile.txt", &front::write_profile(&prof))?;
    let summary_path = write_json(&cfg.out, "front_summary.json", &summary)?;
    println!(
        "front: regime {} residual {:.3e} endpoints ({:.3e}, {:.3e})",
        prof.regime.as_str(),
        prof.residual,
        prof.endpoint_err_left,
        prof.endpoint_err_right
    );
    println!(
        "front: wrote {} and {}",
        profile_path.display(),
        summary_path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct CurveHeader<'a> {
    label: &'a str,
    alpha: f64,
    eta: f64,
    delta: f64,
    epsilon: f64,
    c: f64,
    sigma: Option<f64>,
    n: usize,
}

fn write_curve(
    dir: &Path,
    prefix: &str,
    p: &ModelParams,
    sigma: Option<f64>,
    curve: &SpectralCurve,
) -> Result<String, CliError> {
    let header = CurveHeader {
        label: curve.label.as_str(),
        alpha: p.alpha,
        eta: p.eta,
        delta: p.delta,
        epsilon: p.epsilon,
        c: p.c,
        sigma,
        n: curve.samples.len(),
    };
    let mut text = serde_json::to_string(&header)
        .map_err(|e| config_err(format!("serialization failed: {e}")))?;
    text.push('\n');
    for (k, lam) in &curve.samples {
        let _ = writeln!(text, "{:.16e} {:.16e} {:.16e}", k, lam.re, lam.im);
    }
    let name = format!("{prefix}{}.txt", curve.label.as_str());
    write_text(dir, &name, &text)?;
    Ok(name)
}

#[derive(Serialize)]
struct SpectrumSummary<'a> {
    params: &'a ModelParams,
    k1: Option<f64>,
    k2: Option<f64>,
    lemma3_present: bool,
    gap: Option<f64>,
    weight_interval: Option<WeightInterval>,
    sigma: Option<f64>,
    files: Vec<String>,
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<(), CliError> {
    let p = cfg.params()?;
    let roots = spectrum::disc_roots(&p).ok();
    let gap = spectrum::spectral_gap(&p).ok();
    let interval = spectrum::weight_interval(&p).ok();
    let sigma = interval.map(|iv| cfg.resolve_sigma(iv.sigma_lo, iv.sigma_hi));
    let k_max = 2.0 * roots.map(|(_, k2)| k2).unwrap_or(1.0).max(1.0);
    let grid = spectrum::default_k_grid(k_max, 801);
    let mut files = Vec::new();
    for curve in spectrum::ess_curves_plus(&p, &grid).iter() {
        files.push(write_curve(&cfg.out, "spectrum_", &p, None, curve)?);
    }
    if roots.is_some() {
        for curve in spectrum::ess_curves_minus(&p, 1601)?.iter() {
            files.push(write_curve(&cfg.out, "spectrum_", &p, None, curve)?);
        }
    }
    for curve in spectrum::kpp_ess_curves(&p, &grid).iter() {
        files.push(write_curve(&cfg.out, "spectrum_", &p, None, curve)?);
    }
    if let Some(s) = sigma {
        if s > 0.0 {
            for curve in spectrum::weighted_curves_plus(&p, s, &grid)?.iter() {
                files.push(write_curve(&cfg.out, "spectrum_weighted_", &p, Some(s), curve)?);
            }
        }
    }
    let summary = SpectrumSummary {
        params: &p,
        k1: roots.map(|(k1, _)| k1),
        k2: roots.map(|(_, k2)| k2),
        lemma3_present: roots.is_some(),
        gap,
        weight_interval: interval,
        sigma,
        files,
    };
    let path = write_json(&cfg.out, "spectrum.json", &summary)?;
    match (roots, gap) {
        (Some((k1, k2)), Some(g)) => println!(
            "spectrum: k1 {k1:.6} k2 {k2:.6} gap {g:.6} -> {}",
            path.display()
        ),
        _ => println!(
            "spectrum: lemma-3 branches absent at delta {} -> {}",
            p.delta,
            path.display()
        ),
    }
    Ok(())
}

/// Bound report for whichever regime the parameters select, with the front
/// sup-norms when they enter the estimate.
fn bound_report_for(
    p: &ModelParams,
    prof: &FrontProfile,
) -> Result<(BoundReport, Option<SupNorms>, Option<f64>), CliError> {
    match prof.regime {
        FrontRegime::Kpp => {
            let report = bounds::report_kpp(p, kpp::sup_ftilde(p))?;
            Ok((report, None, None))
        }
        FrontRegime::Three => {
            let (sups, fu_max) = front::sup_norms(prof)?;
            let report = bounds::report_eps_zero(p, &sups)?;
            Ok((report, Some(sups), Some(fu_max)))
        }
        FrontRegime::Four => {
            let (sups, fu_max) = front::sup_norms(prof)?;
            let report = bounds::optimize_betas(p, &sups, &bounds::DEFAULT_BETA_GRID)?;
            Ok((report, Some(sups), Some(fu_max)))
        }
    }
}

#[derive(Serialize)]
struct BoundsSummary<'a> {
    params: &'a ModelParams,
    regime: FrontRegime,
    sup_norms: Option<SupNorms>,
    f_u_max: Option<f64>,
    report: BoundReport,
}

fn cmd_bounds(cfg: &RunConfig) -> Result<(), CliError> {
    let p = cfg.params()?;
    let prof = front::solve_front(&p, &cfg.front_options())?;
    let (report, sups, fu_max) = bound_report_for(&p, &prof)?;
    let summary = BoundsSummary {
        params: &p,
        regime: prof.regime,
        sup_norms: sups,
        f_u_max: fu_max,
        report,
    };
    let path = write_json(&cfg.out, "bounds.json", &summary)?;
    println!(
        "bounds: {} bound {:.6} radius {:.6} -> {}",
        report.regime.as_str(),
        report.bound,
        report.contour_radius,
        path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct EvansSummary<'a> {
    params: &'a ModelParams,
    regime: FrontRegime,
    sigma: f64,
    radius: f64,
    n_min: usize,
    winding: i32,
    total_arg: f64,
    refinements: usize,
    max_phase_jump: f64,
    bound: BoundReport,
    status: &'a str,
}

fn write_trace(
    dir: &Path,
    p: &ModelParams,
    sigma: f64,
    radius: f64,
    winding: i32,
    result: &EvansResult,
) -> Result<PathBuf, CliError> {
    #[derive(Serialize)]
    struct TraceHeader {
        alpha: f64,
        eta: f64,
        delta: f64,
        epsilon: f64,
        c: f64,
        sigma: f64,
        radius: f64,
        winding: i32,
        n: usize,
    }
    let header = TraceHeader {
        alpha: p.alpha,
        eta: p.eta,
        delta: p.delta,
        epsilon: p.epsilon,
        c: p.c,
        sigma,
        radius,
        winding,
        n: result.values.len(),
    };
    let mut text = serde_json::to_string(&header)
        .map_err(|e| config_err(format!("serialization failed: {e}")))?;
    text.push('\n');
    for (lam, e) in &result.values {
        let _ = writeln!(
            text,
            "{:.16e} {:.16e} {:.16e} {:.16e}",
            lam.re, lam.im, e.re, e.im
        );
    }
    write_text(dir, "evans_trace.txt", &text)
}

fn cmd_evans(cfg: &RunConfig) -> Result<(), CliError> {
    let p = cfg.params()?;
    let (prof, kprof);
    let regime;
    if p.delta == 0.0 && p.epsilon == 0.0 {
        kprof = Some(kpp::kpp_front_solve(&p, &cfg.front_options())?);
        prof = None;
        regime = FrontRegime::Kpp;
    } else {
        let solved = front::solve_front(&p, &cfg.front_options())?;
        regime = solved.regime;
        prof = Some(solved);
        kprof = None;
    }
    let (sigma, report, result) = match regime {
        FrontRegime::Kpp => {
            let kprof = kprof.as_ref().unwrap();
            let (lo, hi) = kpp::kpp_weight_interval(&p)?;
            let sigma = cfg.resolve_sigma(lo, hi);
            let report = bounds::report_kpp(&p, kpp::sup_ftilde(&p))?;
            let radius = report.contour_radius;
            let contour = evans::build_contour(radius, cfg.n_min)?;
            let ev = kpp::KppEvaluator::new(kprof, sigma, radius)?;
            let result = evans::winding(|lam| ev.eval(lam), &contour)?;
            (sigma, report, result)
        }
        _ => {
            let prof = prof.as_ref().unwrap();
            let iv = spectrum::weight_interval(&p)?;
            let sigma = cfg.resolve_sigma(iv.sigma_lo, iv.sigma_hi);
            let (report, _, _) = bound_report_for(&p, prof)?;
            let radius = report.contour_radius;
            let sys = evans::build_system(prof, sigma)?;
            let evaluator = evans::EvansEvaluator::new(
                &sys,
                EvalOptions {
                    lambda_ref: radius,
                    ..EvalOptions::default()
                },
            )?;
            let contour = evans::build_contour(radius, cfg.n_min)?;
            let result = evans::winding(|lam| evaluator.eval(lam), &contour)?;
            (sigma, report, result)
        }
    };
    let radius = report.contour_radius;
    let trace_path = write_trace(&cfg.out, &p, sigma, radius, result.winding, &result)?;
    let summary = EvansSummary {
        params: &p,
        regime,
        sigma,
        radius,
        n_min: cfg.n_min,
        winding: result.winding,
        total_arg: result.total_arg,
        refinements: result.refinements,
        max_phase_jump: result.max_phase_jump,
        bound: report,
        status: "ok",
    };
    let json_path = write_json(&cfg.out, "evans.json", &summary)?;
    println!(
        "evans: winding {} over radius {:.6} with sigma {:.6}",
        result.winding, radius, sigma
    );
    println!(
        "evans: wrote {} and {}",
        trace_path.display(),
        json_path.display()
    );
    Ok(())
}

/// One sweep case result; optional fields stay empty in the CSV when the
/// pipeline failed before reaching them.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub alpha: f64,
    pub eta: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub c: f64,
    pub sigma: Option<f64>,
    pub bound: Option<f64>,
    pub radius: Option<f64>,
    pub winding: Option<i32>,
    pub status: &'static str,
    pub seconds: f64,
}

pub const CSV_HEADER: &str = "alpha,eta,delta,epsilon,c,sigma,bound,radius,winding,status,seconds";

fn evans_status(e: &EvansError) -> &'static str {
    match e {
        EvansError::SplittingDegenerate { .. } | EvansError::SplittingCounts { .. } => {
            "splitting-degenerate"
        }
        _ => "unresolved-winding",
    }
}

fn run_case(cfg: &RunConfig, eta: f64, alpha: f64, c: f64) -> SweepRow {
    let start = Instant::now();
    let mut row = SweepRow {
        alpha,
        eta,
        delta: cfg.delta,
        epsilon: cfg.epsilon,
        c,
        sigma: None,
        bound: None,
        radius: None,
        winding: None,
        status: "front-failure",
        seconds: 0.0,
    };
    case_pipeline(cfg, &mut row);
    row.seconds = start.elapsed().as_secs_f64();
    row
}

fn case_pipeline(cfg: &RunConfig, row: &mut SweepRow) {
    let p = match ModelParams::new(row.alpha, row.eta, row.delta, row.epsilon, row.c) {
        Ok(p) => p,
        Err(_) => return,
    };
    let iv = match spectrum::weight_interval(&p) {
        Ok(iv) => iv,
        Err(_) => return,
    };
    let sigma = cfg.resolve_sigma(iv.sigma_lo, iv.sigma_hi);
    row.sigma = Some(sigma);
    let prof = match front::solve_front(&p, &cfg.front_options()) {
        Ok(prof) => prof,
        Err(_) => return,
    };
    let report = match bound_report_for(&p, &prof) {
        Ok((report, _, _)) => report,
        Err(_) => return,
    };
    row.bound = Some(report.bound);
    row.radius = Some(report.contour_radius);
    let sys = match evans::build_system(&prof, sigma) {
        Ok(sys) => sys,
        Err(e) => {
            row.status = evans_status(&e);
            return;
        }
    };
    let evaluator = match evans::EvansEvaluator::new(
        &sys,
        EvalOptions {
            lambda_ref: report.contour_radius,
            ..EvalOptions::default()
        },
    ) {
        Ok(ev) => ev,
        Err(e) => {
            row.status = evans_status(&e);
            return;
        }
    };
    let contour = match evans::build_contour(report.contour_radius, cfg.n_min) {
        Ok(c) => c,
        Err(e) => {
            row.status = evans_status(&e);
            return;
        }
    };
    match evans::winding(|lam| evaluator.eval(lam), &contour) {
        Ok(res) => {
            row.winding = Some(res.winding);
            row.status = "ok";
        }
        Err(e) => row.status = evans_status(&e),
    }
}

/// Case list in deterministic order: the Cartesian grid iterates eta, then
/// alpha, then c; Latin-hypercube strata are shuffled by the seeded stream.
fn sweep_cases(cfg: &RunConfig) -> Vec<(f64, f64, f64)> {
    match cfg.sampling {
        Sampling::Grid => {
            let mut cases = Vec::new();
            for i in 0..cfg.eta_range.count {
                for j in 0..cfg.alpha_range.count {
                    for k in 0..cfg.c_range.count {
                        cases.push((
                            cfg.eta_range.value(i),
                            cfg.alpha_range.value(j),
                            cfg.c_range.value(k),
                        ));
                    }
                }
            }
            cases
        }
        Sampling::Lhs => {
            let n = cfg.samples;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut dims: Vec<Vec<f64>> = Vec::with_capacity(3);
            for range in [&cfg.eta_range, &cfg.alpha_range, &cfg.c_range] {
                let mut strata: Vec<usize> = (0..n).collect();
                strata.shuffle(&mut rng);
                let vals: Vec<f64> = strata
                    .iter()
                    .map(|&s| {
                        let u: f64 = rng.gen();
                        range.lo + (range.hi - range.lo) * ((s as f64) + u) / (n as f64)
                    })
                    .collect();
                dims.push(vals);
            }
            (0..n).map(|i| (dims[0][i], dims[1][i], dims[2][i])).collect()
        }
    }
}

fn format_csv(rows: &[SweepRow]) -> Result<String, CliError> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let to_io = |e: csv::Error| config_err(format!("csv assembly failed: {e}"));
    wtr.write_record(CSV_HEADER.split(',')).map_err(to_io)?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
    for r in rows {
        wtr.write_record([
            format!("{:.16e}", r.alpha),
            format!("{:.16e}", r.eta),
            format!("{:.16e}", r.delta),
            format!("{:.16e}", r.epsilon),
            format!("{:.16e}", r.c),
            opt(r.sigma),
            opt(r.bound),
            opt(r.radius),
            r.winding.map(|w| w.to_string()).unwrap_or_default(),
            r.status.to_string(),
            format!("{:.3}", r.seconds),
        ])
        .map_err(to_io)?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| config_err(format!("csv assembly failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| config_err(format!("csv assembly failed: {e}")))
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    n_cases: usize,
    sampling: &'a str,
    seed: u64,
    delta: f64,
    epsilon: f64,
    sigma: String,
    by_status: BTreeMap<&'static str, usize>,
    by_winding: BTreeMap<String, usize>,
}

fn cmd_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.sampling == Sampling::Lhs && cfg.samples == 0 {
        return Err(config_err("lhs sampling needs samples >= 1"));
    }
    let cases = sweep_cases(cfg);
    if cases.is_empty() {
        return Err(config_err("sweep produced no cases"));
    }
    let work = || -> Vec<SweepRow> {
        cases
            .par_iter()
            .map(|&(eta, alpha, c)| run_case(cfg, eta, alpha, c))
            .collect()
    };
    let rows = if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| config_err(format!("worker pool: {e}")))?
            .install(work)
    } else {
        work()
    };
    let mut by_status: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut by_winding: BTreeMap<String, usize> = BTreeMap::new();
    for r in &rows {
        *by_status.entry(r.status).or_insert(0) += 1;
        if let Some(w) = r.winding {
            *by_winding.entry(w.to_string()).or_insert(0) += 1;
        }
    }
    let csv_path = write_text(&cfg.out, "sweep.csv", &format_csv(&rows)?)?;
    let summary = SweepSummary {
        n_cases: rows.len(),
        sampling: cfg.sampling.as_str(),
        seed: cfg.seed,
        delta: cfg.delta,
        epsilon: cfg.epsilon,
        sigma: cfg.sigma.describe(),
        by_status,
        by_winding,
    };
    let json_path = write_json(&cfg.out, "sweep_summary.json", &summary)?;
    let ok = rows.iter().filter(|r| r.status == "ok").count();
    println!(
        "sweep: {} cases, {} ok -> {} and {}",
        rows.len(),
        ok,
        csv_path.display(),
        json_path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct CompareSummary<'a> {
    params: &'a ModelParams,
    radius_full: f64,
    radius_kpp: f64,
    report: kpp::CompareReport,
}

fn cmd_kpp_compare(cfg: &RunConfig) -> Result<(), CliError> {
    let p = cfg.params()?;
    if !(p.delta > 0.0) {
        return Err(config_err(
            "kpp-compare needs delta > 0 so the full and reduced problems differ",
        ));
    }
    let opts = cfg.front_options();
    let full = front::solve_front(&p, &opts)?;
    let kprof = kpp::kpp_front_solve(&p, &opts)?;
    let iv = spectrum::weight_interval(&p)?;
    let sigma = cfg.resolve_sigma(iv.sigma_lo, iv.sigma_hi);
    let (full_report, _, _) = bound_report_for(&p, &full)?;
    let kpp_report = bounds::report_kpp(&kprof.params, kpp::sup_ftilde(&p))?;
    let radius = full_report.contour_radius.max(kpp_report.contour_radius);
    let report = kpp::compare_counts(&full, &kprof, sigma, radius)?;
    let summary = CompareSummary {
        params: &p,
        radius_full: full_report.contour_radius,
        radius_kpp: kpp_report.contour_radius,
        report,
    };
    let path = write_json(&cfg.out, "kpp_compare.json", &summary)?;
    println!(
        "kpp-compare: full {:?} kpp {:?} equal {:?} -> {}",
        report.winding_full,
        report.winding_kpp,
        report.equal,
        path.display()
    );
    Ok(())
}

fn cmd_selftest(_cfg: &RunConfig) -> Result<(), CliError> {
    let mut all = true;
    let mut check = |name: &str, pass: bool, detail: String| {
        all &= pass;
        if pass {
            println!("selftest {name}: pass");
        } else {
            println!("selftest {name}: FAIL ({detail})");
        }
    };
    let p = ModelParams::new(0.75, 3.0, 0.1, 0.01, 1.0)?;
    match spectrum::disc_roots(&p) {
        Ok((k1, k2)) => check(
            "disc-roots",
            (k1 - 2.2506).abs() < 5e-4 && (k2 - 2.8146).abs() < 5e-4,
            format!("k1 {k1} k2 {k2}"),
        ),
        Err(e) => check("disc-roots", false, e.to_string()),
    }
    let p0 = ModelParams::new(0.75, 3.0, 0.1, 0.0, 1.0)?;
    match spectrum::disc_roots(&p0) {
        Ok((k1, k2)) => check(
            "disc-roots-eps-zero",
            (k1 - 2.2393).abs() < 5e-4 && (k2 - 2.8005).abs() < 5e-4,
            format!("k1 {k1} k2 {k2}"),
        ),
        Err(e) => check("disc-roots-eps-zero", false, e.to_string()),
    }
    match spectrum::spectral_gap(&p) {
        Ok(g) => check(
            "spectral-gap",
            (g.abs() - 0.0787).abs() < 5e-4,
            format!("gap {g}"),
        ),
        Err(e) => check("spectral-gap", false, e.to_string()),
    }
    match spectrum::weight_interval(&p) {
        Ok(iv) => check(
            "weight-interval",
            (iv.sigma_lo - 0.067).abs() < 5e-3 && (iv.sigma_hi - 0.93).abs() < 5e-3,
            format!("({}, {})", iv.sigma_lo, iv.sigma_hi),
        ),
        Err(e) => check("weight-interval", false, e.to_string()),
    }
    match kpp::kpp_reaction(&p, 0.2) {
        Ok(v) => check(
            "kpp-reaction",
            (v - 0.007417121128041086).abs() < 1e-12,
            format!("value {v}"),
        ),
        Err(e) => check("kpp-reaction", false, e.to_string()),
    }
    let quick = FrontOptions {
        half_length: Some(60.0),
        n_nodes: 601,
        ..FrontOptions::default()
    };
    match kpp::kpp_front_solve(&ModelParams::new(0.75, 3.0, 0.0, 0.0, 1.0)?, &quick) {
        Ok(prof) => check(
            "kpp-front",
            prof.residual <= 1e-8,
            format!("residual {}", prof.residual),
        ),
        Err(e) => check("kpp-front", false, e.to_string()),
    }
    if all {
        Ok(())
    } else {
        Err(CliError::Front(FrontError::Invalid {
            op: "selftest",
            msg: "one or more reference checks failed".into(),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args_default() -> CommonArgs {
        CommonArgs {
            config: None,
            out: None,
            jobs: None,
            sigma: None,
            epsilon_zero: false,
            alpha: None,
            eta: None,
            delta: None,
            epsilon: None,
            c: None,
            half_length: None,
            nodes: None,
            tol: None,
            n_min: None,
            seed: None,
            sampling: None,
            samples: None,
            eta_lo: None,
            eta_hi: None,
            eta_count: None,
            alpha_lo: None,
            alpha_hi: None,
            alpha_count: None,
            c_lo: None,
            c_hi: None,
            c_count: None,
        }
    }

    #[test]
    fn defaults_give_standard_sweep_shape() {
        let cfg = build_config(&args_default()).unwrap();
        assert_eq!(cfg.eta_range.count, 10);
        assert_eq!(cfg.alpha_range.count, 8);
        assert_eq!(cfg.c_range.count, 11);
        assert_eq!(sweep_cases(&cfg).len(), 880);
    }

    #[test]
    fn file_then_flags_override_in_order() {
        let mut cfg = RunConfig::default();
        apply_file(
            &mut cfg,
            "alpha = 0.75\nsigma = \"sattinger\"\nhalf_length = 90.0\nnodes = 801\n",
        )
        .unwrap();
        assert_eq!(cfg.alpha, 0.75);
        assert_eq!(cfg.sigma, SigmaSpec::Sattinger);
        assert_eq!(cfg.half_length, LengthSpec::Value(90.0));
        let mut args = args_default();
        args.alpha = Some(0.6);
        args.sigma = Some("0.4".into());
        let mut cfg2 = build_config(&args).unwrap();
        assert_eq!(cfg2.alpha, 0.6);
        assert_eq!(cfg2.sigma, SigmaSpec::Value(0.4));
        args.epsilon_zero = true;
        cfg2 = build_config(&args).unwrap();
        assert_eq!(cfg2.epsilon, 0.0);
    }

    #[test]
    fn unknown_key_and_bad_values_rejected() {
        let mut cfg = RunConfig::default();
        assert!(apply_file(&mut cfg, "alpa = 0.5\n").is_err());
        assert!(apply_file(&mut cfg, "sigma = [1, 2]\n").is_err());
        assert!(SigmaSpec::parse("fast").is_err());
        assert!(LengthSpec::parse("none").is_err());
        assert!(Sampling::parse("random").is_err());
    }

    #[test]
    fn zero_count_is_invalid_config() {
        let mut args = args_default();
        args.c_count = Some(0);
        let err = build_config(&args).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn grid_order_is_eta_alpha_c() {
        let cfg = RunConfig {
            eta_range: SweepRange {
                lo: 2.0,
                hi: 3.0,
                count: 2,
            },
            alpha_range: SweepRange {
                lo: 0.1,
                hi: 0.2,
                count: 2,
            },
            c_range: SweepRange {
                lo: 1.0,
                hi: 1.0,
                count: 1,
            },
            ..RunConfig::default()
        };
        let cases = sweep_cases(&cfg);
        assert_eq!(cases.len(), 4);
        assert_eq!(cases[0], (2.0, 0.1, 1.0));
        assert_eq!(cases[1], (2.0, 0.2, 1.0));
        assert_eq!(cases[2], (3.0, 0.1, 1.0));
        assert_eq!(cases[3], (3.0, 0.2, 1.0));
    }

    #[test]
    fn lhs_is_seed_deterministic_and_stratified() {
        let mut cfg = RunConfig {
            sampling: Sampling::Lhs,
            samples: 16,
            seed: 7,
            ..RunConfig::default()
        };
        let a = sweep_cases(&cfg);
        let b = sweep_cases(&cfg);
        assert_eq!(a, b);
        cfg.seed = 8;
        let c = sweep_cases(&cfg);
        assert_ne!(a, c);
        // one sample per stratum in each dimension
        let mut strata: Vec<usize> = a
            .iter()
            .map(|&(eta, _, _)| (((eta - 2.0) / 1.0) * 16.0).floor() as usize)
            .collect();
        strata.sort_unstable();
        assert_eq!(strata, (0..16).collect::<Vec<_>>());
        for &(eta, alpha, c) in &a {
            assert!((2.0..=3.0).contains(&eta));
            assert!((0.1..=0.8).contains(&alpha));
            assert!((1.0..=2.0).contains(&c));
        }
    }

    #[test]
    fn csv_rows_match_header_and_empty_fields() {
        let rows = vec![SweepRow {
            alpha: 0.1,
            eta: 2.0,
            delta: 0.1,
            epsilon: 0.05,
            c: 1.0,
            sigma: None,
            bound: None,
            radius: None,
            winding: None,
            status: "front-failure",
            seconds: 0.25,
        }];
        let text = format_csv(&rows).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let row = lines.next().unwrap();
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 11);
        assert_eq!(fields[5], "");
        assert_eq!(fields[8], "");
        assert_eq!(fields[9], "front-failure");
        assert_eq!(fields[10], "0.250");
    }

    #[test]
    fn exit_codes_by_error_class() {
        let cfg_err = config_err("x");
        assert_eq!(cfg_err.exit_code(), 2);
        let front_num = CliError::Front(FrontError::Continuation {
            stage: "kpp".into(),
            iters: 25,
            residual: 1.0,
        });
        assert_eq!(front_num.exit_code(), 3);
        let front_cfg = CliError::Front(FrontError::SubcriticalSpeed {
            c: 0.1,
            min_speed: 0.5,
        });
        assert_eq!(front_cfg.exit_code(), 2);
        let ev = CliError::Evans(EvansError::UnresolvedWinding {
            msg: "test".into(),
        });
        assert_eq!(ev.exit_code(), 3);
    }

    #[test]
    fn status_mapping_covers_variants() {
        assert_eq!(
            evans_status(&EvansError::SplittingDegenerate {
                lambda: crate::numerics::C64::new(0.0, 0.0),
                mu_re_abs: 0.0,
            }),
            "splitting-degenerate"
        );
        assert_eq!(
            evans_status(&EvansError::UnresolvedWinding { msg: "x".into() }),
            "unresolved-winding"
        );
    }
}
