//! The `curveflow` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::audit::AuditReport;
use crate::ensemble::{martingale_tests, run_ensemble, EnsembleConfig, PathRecord};
use crate::error::{Error, Result};
use crate::flow::deterministic::{deterministic_monitor_audit_with, DeterministicTolerances};
use crate::flow::stochastic::{noise_limit, pathwise_monitor_audit, run_stochastic, StochasticFlow, StochasticScheme};
use crate::flow::{run_rcf, Derivative, FlowConfig};
use crate::geometry::{
    ellipse, geometry_report, support_fourier, CurvatureProfile, GeometryReport, InequalityCheck,
    DEFAULT_CLOSURE_TOL,
};
use crate::io::{self, RunManifest};
use crate::symmetry::{class_membership, extract_skeleton, flower, isoperimetric_estimate_check};

pub const EXIT_OK: i32 = 0;
pub const EXIT_AUDIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "curveflow", version, about = "Curvature flows of convex curves in the tangent-angle picture")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a profile JSON for a standard curve.
    Generate(GenerateArgs),
    /// Run a flow, write the trajectory and audit it.
    Run(RunArgs),
    /// Geometry report and inequality audit of one profile.
    Check(CheckArgs),
    /// Monte Carlo ensemble and martingale tests.
    Ensemble(EnsembleArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CurveKind {
    Circle,
    Ellipse,
    Flower,
    SupportFourier,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: CurveKind,
    /// Grid size; defaults to 256 (rounded up to a multiple of 2n for flowers).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Ellipse semi-axis along x.
    #[arg(long, default_value_t = 2.0)]
    pub a: f64,
    /// Ellipse semi-axis along y.
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    /// Symmetry order.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub a0: f64,
    /// Support coefficients `a0,a1,...` of cos(k n θ).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coefficients: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    Rcf,
    Srcf,
    Scf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SchemeArg {
    Curvature,
    Radius,
}

impl From<SchemeArg> for StochasticScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Curvature => StochasticScheme::Curvature,
            SchemeArg::Radius => StochasticScheme::Radius,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DerivativeArg {
    Spectral,
    FiniteDifference,
}

#[derive(Debug, Args)]
pub struct StepArgs {
    #[arg(long, visible_alias = "t", default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long)]
    pub dt_max: Option<f64>,
    /// Fixed step; refused when above the CFL limit of the initial profile.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 0.4)]
    pub cfl: f64,
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
    #[arg(long)]
    pub enforce_symmetry: bool,
    /// Zero Brownian increments (debugging).
    #[arg(long)]
    pub noise_off: bool,
    #[arg(long, value_enum, default_value = "radius")]
    pub scheme: SchemeArg,
    #[arg(long, value_enum, default_value = "spectral")]
    pub derivative: DerivativeArg,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(value_enum)]
    pub flow: FlowKind,
    pub profile: PathBuf,
    #[command(flatten)]
    pub step: StepArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Declared tolerance of the final `σ²/λ − 4π` (deterministic runs).
    #[arg(long)]
    pub final_ratio: Option<f64>,
    #[arg(long)]
    pub keep_profiles: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub profile: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    pub profile: PathBuf,
    #[arg(long, default_value_t = 256)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    #[arg(long, value_enum, default_value = "srcf")]
    pub flow: FlowKind,
    /// Extra checkpoint times; `t_end` is always one.
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Vec<f64>,
    #[command(flatten)]
    pub step: StepArgs,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let echo: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let result = match &cli.command {
        Command::Generate(a) => generate(a, echo),
        Command::Run(a) => run_flow(a, echo),
        Command::Check(a) => check(a, echo),
        Command::Ensemble(a) => ensemble(a, echo),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", json!({ "passed": false, "error": e.to_string() }));
            match e {
                Error::NotClosed { .. } | Error::PositivityLost { .. } | Error::Json(_) => EXIT_AUDIT_FAILED,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value)?;
    // a closed pipe is not an error for the caller
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(())
}

fn generate(a: &GenerateArgs, echo: Vec<String>) -> Result<i32> {
    let start = Instant::now();
    let samples = a.samples.unwrap_or(match a.kind {
        CurveKind::Flower | CurveKind::SupportFourier => 256usize.div_ceil(2 * a.n.max(1)) * 2 * a.n.max(1),
        _ => 256,
    });
    let profile = match a.kind {
        CurveKind::Circle => CurvatureProfile::circle(samples, a.radius)?,
        CurveKind::Ellipse => ellipse(samples, a.a, a.b)?,
        CurveKind::Flower => flower(samples, a.n, a.eps, a.a0)?,
        CurveKind::SupportFourier => {
            if a.coefficients.is_empty() {
                return Err(Error::InvalidConfig("support-fourier needs --coefficients a0,a1,...".into()));
            }
            support_fourier(samples, a.n, &a.coefficients)?
        }
    };
    profile.validate(DEFAULT_CLOSURE_TOL)?;
    io::ensure_dir(&a.out)?;
    let path = a.out.join("profile.json");
    io::write_profile(&path, &profile)?;
    let config = json!({
        "kind": format!("{:?}", a.kind).to_lowercase(),
        "samples": samples, "radius": a.radius, "a": a.a, "b": a.b,
        "n": a.n, "eps": a.eps, "a0": a.a0, "coefficients": a.coefficients,
    });
    let mut m = RunManifest::new("generate", echo, config);
    m.outputs = vec![path.clone()];
    m.wall_clock_seconds = start.elapsed().as_secs_f64();
    m.write(&a.out)?;
    print_json(&json!({ "profile": path, "n_samples": samples, "rho_min": profile.rho_min(), "rho_max": profile.rho_max() }))?;
    Ok(EXIT_OK)
}

fn flow_config(step: &StepArgs, profile: &CurvatureProfile, default_dt_max: f64) -> Result<FlowConfig> {
    let mut cfg = FlowConfig {
        t_end: step.t_end,
        cfl: step.cfl,
        dt_max: step.dt_max.unwrap_or(default_dt_max),
        record_every: step.record_every,
        derivative: match step.derivative {
            DerivativeArg::Spectral => Derivative::Spectral,
            DerivativeArg::FiniteDifference => Derivative::FiniteDifference,
        },
        enforce_symmetry: step.enforce_symmetry,
        noise_off: step.noise_off,
        ..FlowConfig::default()
    };
    cfg.validate()?;
    if let Some(dt) = step.dt {
        let limit = cfg.cfl_limit(profile);
        if !(dt > 0.0) || dt > limit {
            return Err(Error::InvalidConfig(format!(
                "CFL violation: dt = {dt:e} exceeds cfl*dtheta^2/rho_max^2 = {limit:e}"
            )));
        }
        cfg.dt_max = dt;
    }
    Ok(cfg)
}

fn stochastic_flow(kind: FlowKind) -> Option<StochasticFlow> {
    match kind {
        FlowKind::Rcf => None,
        FlowKind::Srcf => Some(StochasticFlow::Srcf),
        FlowKind::Scf => Some(StochasticFlow::Scf),
    }
}

fn finish_audit(audit: &AuditReport, out: &Path) -> Result<i32> {
    io::write_json(&out.join("audit.json"), audit)?;
    let summary: Vec<_> = audit
        .claims
        .iter()
        .map(|c| json!({ "name": c.name, "passed": c.passed, "margin": c.margin }))
        .collect();
    print_json(&json!({ "passed": audit.passed, "claims": summary }))?;
    if audit.passed {
        Ok(EXIT_OK)
    } else {
        eprintln!("{}", serde_json::to_string(&json!({ "passed": false, "failures": audit.failures() }))?);
        Ok(EXIT_AUDIT_FAILED)
    }
}

fn run_flow(a: &RunArgs, echo: Vec<String>) -> Result<i32> {
    let start = Instant::now();
    let profile = io::read_profile(&a.profile)?;
    profile.validate(DEFAULT_CLOSURE_TOL)?;
    let mut cfg = flow_config(&a.step, &profile, 1e-3)?;
    cfg.keep_profiles = a.keep_profiles;
    let sto = stochastic_flow(a.flow);
    io::ensure_dir(&a.out)?;
    let traj_path = a.out.join("trajectory.jsonl");
    let final_path = a.out.join("final_profile.json");
    let flow_name = format!("{:?}", a.flow).to_lowercase();
    let (audit, final_profile, seeds) = match sto {
        None => {
            let traj = run_rcf(&profile, &cfg)?;
            io::write_trajectory(&traj_path, &flow_name, &traj, None)?;
            let tol = DeterministicTolerances { final_ratio: a.final_ratio, ..Default::default() };
            (deterministic_monitor_audit_with(&traj, &tol), traj.final_profile.clone(), vec![])
        }
        Some(flow) => {
            let out = run_stochastic(&profile, &cfg, a.seed, flow, a.step.scheme.into())?;
            io::write_trajectory(&traj_path, &flow_name, &out.trajectory, Some(&out))?;
            (pathwise_monitor_audit(&out), out.trajectory.final_profile.clone(), vec![a.seed])
        }
    };
    let mut outputs = vec![traj_path, a.out.join("audit.json")];
    if let Some(p) = &final_profile {
        io::write_profile(&final_path, p)?;
        outputs.push(final_path);
    }
    let mut config = serde_json::to_value(&cfg)?;
    config["flow"] = json!(flow_name);
    if sto.is_some() {
        config["scheme"] = serde_json::to_value(StochasticScheme::from(a.step.scheme))?;
        config["initial_noise_limit"] = json!(noise_limit(&profile));
    }
    let mut m = RunManifest::new("run", echo, config);
    m.seeds = seeds;
    m.inputs = vec![a.profile.clone()];
    m.outputs = outputs;
    let code = finish_audit(&audit, &a.out)?;
    m.wall_clock_seconds = start.elapsed().as_secs_f64();
    m.write(&a.out)?;
    Ok(code)
}

#[derive(Debug, Serialize)]
struct CheckReport {
    passed: bool,
    closure_ok: bool,
    report: GeometryReport,
    inequalities: Vec<InequalityCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    symmetry: Option<serde_json::Value>,
}

fn check(a: &CheckArgs, echo: Vec<String>) -> Result<i32> {
    let start = Instant::now();
    let profile = io::read_profile(&a.profile)?;
    let closure_ok = profile.validate(DEFAULT_CLOSURE_TOL).is_ok();
    let report = geometry_report(&profile)?;
    let inequalities = report.inequality_slacks();
    let mut passed = closure_ok && inequalities.iter().all(|c| c.holds);
    let n = profile.symmetry_order();
    let symmetry = if n >= 2 {
        let m = class_membership(&profile, n);
        let mut v = json!({ "membership": m });
        if m.in_sn {
            let chain = isoperimetric_estimate_check(&profile, n)?;
            passed &= chain.holds;
            v["skeleton"] = serde_json::to_value(extract_skeleton(&profile, n)?)?;
            v["chain"] = serde_json::to_value(&chain)?;
        }
        Some(v)
    } else {
        None
    };
    let out = CheckReport { passed, closure_ok, report, inequalities, symmetry };
    print_json(&out)?;
    if let Some(dir) = &a.out {
        io::ensure_dir(dir)?;
        let path = dir.join("check.json");
        io::write_json(&path, &out)?;
        let mut m = RunManifest::new("check", echo, json!({}));
        m.inputs = vec![a.profile.clone()];
        m.outputs = vec![path];
        m.wall_clock_seconds = start.elapsed().as_secs_f64();
        m.write(dir)?;
    }
    Ok(if passed { EXIT_OK } else { EXIT_AUDIT_FAILED })
}

#[derive(Debug, Serialize)]
struct PathHeader<'a> {
    index: usize,
    seed: u64,
    stop_reason: crate::flow::StopReason,
    stopped_at: Option<f64>,
    quantities: &'a [crate::ensemble::Quantity],
}

#[derive(Debug, Serialize)]
struct PathLine<'a> {
    t: f64,
    alive: bool,
    values: &'a [f64],
}

fn write_path(dir: &Path, p: &PathRecord) -> Result<PathBuf> {
    let path = dir.join(format!("path_{:05}.jsonl", p.index));
    let header = PathHeader {
        index: p.index,
        seed: p.seed,
        stop_reason: p.stop_reason,
        stopped_at: p.stopped_at,
        quantities: &p.quantities,
    };
    let lines: Vec<PathLine> =
        (0..p.times.len()).map(|i| PathLine { t: p.times[i], alive: p.alive[i], values: &p.values[i] }).collect();
    io::write_jsonl(&path, &header, &lines)?;
    Ok(path)
}

fn ensemble(a: &EnsembleArgs, echo: Vec<String>) -> Result<i32> {
    let start = Instant::now();
    let profile = io::read_profile(&a.profile)?;
    profile.validate(DEFAULT_CLOSURE_TOL)?;
    let flow = flow_config(&a.step, &profile, 1e-4)?;
    let stochastic_flow = stochastic_flow(a.flow)
        .ok_or_else(|| Error::InvalidConfig("ensembles need a stochastic flow (srcf or scf)".into()))?;
    let mut checkpoints = a.checkpoints.clone();
    checkpoints.push(flow.t_end);
    let config = EnsembleConfig {
        n_paths: a.paths,
        base_seed: a.base_seed,
        flow,
        stochastic_flow,
        scheme: a.step.scheme.into(),
        checkpoints,
        ..EnsembleConfig::default()
    };
    let out = run_ensemble(&profile, &config)?;
    io::ensure_dir(&a.out)?;
    let paths_dir = a.out.join("paths");
    io::ensure_dir(&paths_dir)?;
    let mut outputs = Vec::new();
    for p in &out.paths {
        outputs.push(write_path(&paths_dir, p)?);
    }
    let stats_path = a.out.join("stats.json");
    io::write_json(&stats_path, &out.stats)?;
    outputs.push(stats_path);
    let code = match martingale_tests(&out.stats, &out.paths) {
        Ok(report) => {
            let path = a.out.join("verdicts.json");
            io::write_json(&path, &report)?;
            outputs.push(path);
            print_json(&report)?;
            if report.passed {
                EXIT_OK
            } else {
                EXIT_AUDIT_FAILED
            }
        }
        Err(e) => {
            eprintln!("{}", json!({ "passed": false, "error": e.to_string() }));
            EXIT_AUDIT_FAILED
        }
    };
    let mut m = RunManifest::new("ensemble", echo, serde_json::to_value(&config)?);
    m.seeds = (0..config.n_paths).map(|i| config.seed(i)).collect();
    m.inputs = vec![a.profile.clone()];
    m.outputs = outputs;
    m.wall_clock_seconds = start.elapsed().as_secs_f64();
    m.write(&a.out)?;
    Ok(code)
}
