use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use super::config::RunConfig;
use super::experiment::{reproduce_experiment, ExperimentSpec};
use super::plot::{emit_plot_data, PlotStyle};
use super::sweep::{run_sweep, SweepSpec};
use crate::diagnostics::{
    a2pg_stationarity_report, a2vi_residual_report, check_activation, check_step_size, contraction_estimate,
    probe_delays, Verdict,
};
use crate::error::{Error, Result};
use crate::sa::run;
use crate::schedules::{ActivationPolicy, ActivationSampler};

pub const EXIT_OK: i32 = 0;
/// A report was produced and its verdict is `fail`.
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_RUN: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "asyncsa", version, about = "Asynchronous stochastic approximation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single run; writes the trace.
    Run(RunArgs),
    /// Parameter sweep; writes an aggregate CSV.
    Sweep(SweepArgs),
    /// Two-agent quadratic experiment for figure 1 (p_c = 0.4) or 2 (p_c = 0.8).
    ReproduceFig(FigArgs),
    /// MDP run followed by the residual-set report.
    A2vi(ReportArgs),
    /// Smooth-benchmark run followed by the stationarity report.
    A2pg(ReportArgs),
    /// Assumption reports for a configuration.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configuration's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    /// Additive slack on the bound.
    #[arg(long, default_value_t = 0.05)]
    tolerance: f64,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct FigArgs {
    /// 1 or 2.
    figure: u8,
    /// Number of sample runs.
    #[arg(long, default_value_t = 5)]
    runs: usize,
    /// Seed of the first sample run; later runs use consecutive seeds.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Reuse matrices and initial points across p_c values.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    paired_instances: bool,
    /// Add an ε = 0 control cell to each sample run.
    #[arg(long)]
    control: bool,
    #[arg(long, default_value = "wide")]
    style: PlotStyle,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0.6)]
    eta: f64,
    /// Activation-frequency threshold; half the nominal minimum frequency by default.
    #[arg(long)]
    tau: Option<f64>,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Divergence { .. } | Error::NonConvergence { .. } => EXIT_RUN,
        _ => EXIT_CONFIG,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) => "config",
        Error::DelayOutOfRange { .. } => "delay-out-of-range",
        Error::WindowExceeded { .. } => "window-exceeded",
        Error::Divergence { .. } => "divergence",
        Error::DimensionMismatch { .. } => "dimension-mismatch",
        Error::NotPositiveDefinite { .. } => "not-positive-definite",
        Error::InvalidMdp(_) => "invalid-mdp",
        Error::NonConvergence { .. } => "non-convergence",
        Error::InsufficientActivation { .. } => "insufficient-activation",
        Error::Misaligned(_) => "misaligned",
        Error::Parse(_) => "parse",
        Error::Io(_) => "io",
    }
}

fn report_error(e: &Error) -> i32 {
    let code = exit_code(e);
    eprintln!("{}", json!({ "error": error_kind(e), "message": e.to_string(), "exit_code": code }));
    code
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::ReproduceFig(a) => cmd_fig(&a),
        Command::A2vi(a) => cmd_a2vi(&a),
        Command::A2pg(a) => cmd_a2pg(&a),
        Command::Check(a) => cmd_check(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => report_error(&e),
    }
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// `--out` wins; otherwise the configured path; otherwise `default` in the
/// working directory.
fn output_path(out: Option<&Path>, configured: Option<&Path>, default: &str) -> Result<PathBuf> {
    let path = match (out, configured) {
        (Some(dir), Some(file)) => dir.join(file.file_name().unwrap_or(default.as_ref())),
        (Some(dir), None) => dir.join(default),
        (None, Some(file)) => file.to_path_buf(),
        (None, None) => PathBuf::from(default),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(path)
}

/// Prints one line to stdout, ignoring a closed pipe.
fn emit(line: impl std::fmt::Display) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value).expect("json values serialize") + "\n")?;
    Ok(())
}

fn verdict_code(v: Verdict) -> i32 {
    if v == Verdict::Fail {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    }
}

fn cmd_run(a: &RunArgs) -> Result<i32> {
    let cfg = load(&a.common)?;
    let spec = cfg.run_spec()?;
    let path = output_path(a.common.out.as_deref(), cfg.output.trace.as_deref(), "trace.csv")?;
    let trace = match run(&spec) {
        Ok(t) => t,
        Err(failure) => {
            if let Some(partial) = &failure.partial {
                partial.save(&path)?;
            }
            return Err(failure.error);
        }
    };
    trace.save(&path)?;
    let last = trace.rows.last().expect("non-empty trace");
    emit(json!({ "trace": path, "rows": trace.len(), "final": last.x, "residual": last.residual, "seed": cfg.seed }));
    Ok(EXIT_OK)
}

fn cmd_sweep(a: &SweepArgs) -> Result<i32> {
    let spec = SweepSpec::load(&a.config)?;
    let table = run_sweep(&spec, a.jobs)?;
    let path = output_path(Some(&a.out), None, "sweep.csv")?;
    table.write_csv(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
    emit(json!({ "table": path, "cells": table.rows.len() }));
    Ok(EXIT_OK)
}

fn cmd_fig(a: &FigArgs) -> Result<i32> {
    if a.runs == 0 {
        return Err(Error::Config("need at least one sample run".into()));
    }
    let seeds = (0..a.runs as u64).map(|k| a.seed + k).collect();
    let mut spec = ExperimentSpec::figure(a.figure, seeds)?;
    spec.paired_instances = a.paired_instances;
    spec.include_control = a.control;
    let table = reproduce_experiment(&spec, a.jobs)?;
    let data = output_path(Some(&a.out), None, &format!("fig{}.csv", a.figure))?;
    table.write_csv(std::io::BufWriter::new(std::fs::File::create(&data)?))?;
    let plot = output_path(Some(&a.out), None, &format!("fig{}_plot.csv", a.figure))?;
    emit_plot_data(&table, a.style, std::io::BufWriter::new(std::fs::File::create(&plot)?))?;
    emit(json!({ "table": data, "plot": plot, "rows": table.rows.len(), "p_c": spec.p_c }));
    Ok(EXIT_OK)
}

fn final_iterate(cfg: &RunConfig, objective: &super::config::ResolvedObjective, out: Option<&Path>) -> Result<Vec<f64>> {
    let spec = cfg.run_spec_with(objective)?;
    let trace = run(&spec).map_err(|f| f.error)?;
    if out.is_some() || cfg.output.trace.is_some() {
        trace.save(&output_path(out, cfg.output.trace.as_deref(), "trace.csv")?)?;
    }
    Ok(trace.final_iterate().expect("non-empty trace").to_vec())
}

fn cmd_a2vi(a: &ReportArgs) -> Result<i32> {
    let cfg = load(&a.common)?;
    let objective = cfg.resolve_objective()?;
    let mdp = objective
        .mdp
        .clone()
        .ok_or_else(|| Error::Config("a2vi needs a `bellman` or `random-mdp` objective".into()))?;
    let j = final_iterate(&cfg, &objective, a.common.out.as_deref())?;
    let (norm, _) = mdp.contraction_norm()?;
    let report = a2vi_residual_report(&mdp, &j, cfg.error.bound(), &norm, a.tolerance)?;
    let value = json!({
        "report": report,
        "final": j,
        "epsilon": cfg.error.bound(),
        "seed": cfg.seed,
        "config": cfg.resolved_json(),
    });
    if a.common.out.is_some() || cfg.output.report.is_some() {
        write_json(&output_path(a.common.out.as_deref(), cfg.output.report.as_deref(), "a2vi_report.json")?, &value)?;
    }
    emit(&value);
    Ok(verdict_code(report.verdict))
}

fn cmd_a2pg(a: &ReportArgs) -> Result<i32> {
    let cfg = load(&a.common)?;
    let objective = cfg.resolve_objective()?;
    let smooth = objective
        .smooth
        .clone()
        .ok_or_else(|| Error::Config("a2pg needs a `quadratic-bowl` or `rosenbrock` objective".into()))?;
    let theta = final_iterate(&cfg, &objective, a.common.out.as_deref())?;
    let report = a2pg_stationarity_report(&smooth, &theta, cfg.error.bound())?;
    let value = json!({
        "report": report,
        "final": theta,
        "epsilon": cfg.error.bound(),
        "seed": cfg.seed,
        "config": cfg.resolved_json(),
    });
    if a.common.out.is_some() || cfg.output.report.is_some() {
        write_json(&output_path(a.common.out.as_deref(), cfg.output.report.as_deref(), "a2pg_report.json")?, &value)?;
    }
    emit(&value);
    Ok(verdict_code(report.verdict))
}

fn nominal_frequency(policy: &ActivationPolicy, d: usize) -> f64 {
    match policy {
        ActivationPolicy::All => 1.0,
        ActivationPolicy::RoundRobin { k } => *k as f64 / d as f64,
        ActivationPolicy::Bernoulli { probs } => probs.iter().cloned().fold(1.0, f64::min),
    }
}

fn cmd_check(a: &CheckArgs) -> Result<i32> {
    let cfg = load(&a.common)?;
    let objective = cfg.resolve_objective()?;
    let spec = cfg.run_spec_with(&objective)?;
    let d = spec.dim();
    let horizon = cfg.horizon.max(100);
    let steps = check_step_size(&cfg.step_size, horizon, a.eta)?;
    let tau = a.tau.unwrap_or(0.5 * nominal_frequency(&cfg.activation, d));
    let sets = ActivationSampler::new(cfg.activation.clone(), d, cfg.seed)?.generate(horizon as usize);
    let activation = check_activation(&sets, tau)?;
    let delays = probe_delays(&cfg.delay, &cfg.activation, &cfg.step_size, d, horizon, 0.1, cfg.seed)?;
    let mut value = json!({
        "step_size": steps,
        "activation": activation,
        "delays": delays,
        "seed": cfg.seed,
        "horizon": horizon,
        "config": cfg.resolved_json(),
    });
    if let Some(mdp) = &objective.mdp {
        let (norm, modulus) = mdp.contraction_norm()?;
        let estimate = contraction_estimate(mdp, &norm, 1000, cfg.seed)?;
        value["contraction"] = json!({ "estimate": estimate, "modulus": modulus, "norm": norm });
    }
    let verdicts = [steps.verdict, activation.verdict];
    let verdict = if verdicts.contains(&Verdict::Fail) {
        Verdict::Fail
    } else if verdicts.contains(&Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    value["verdict"] = json!(verdict);
    if a.common.out.is_some() || cfg.output.report.is_some() {
        write_json(&output_path(a.common.out.as_deref(), cfg.output.report.as_deref(), "check_report.json")?, &value)?;
    }
    emit(&value);
    Ok(verdict_code(verdict))
}
