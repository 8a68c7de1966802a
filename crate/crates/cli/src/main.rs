//! `proxnewton` — run experiments, check rate regions and audit traces.
//!
//! Exit codes: 0 success; 1 error; 2 audit violations; 3 only the
//! R-superlinear region is feasible; 4 neither region is feasible.

mod experiment;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use proxnewton::analysis::{audit_trace, check_region, estimate_rate, Violation, DEFAULT_FLOOR};
use proxnewton::solvers::run;
use proxnewton::{Termination, Trace};
use serde::Serialize;

use experiment::ExperimentConfig;

const EXIT_ERROR: u8 = 1;
const EXIT_VIOLATIONS: u8 = 2;
const EXIT_R_ONLY: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;

#[derive(Parser)]
#[command(name = "proxnewton", version, about = "Inexact proximal-Newton experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment(s) described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Report which superlinear regimes the exponents (p, q, rho) admit.
    CheckRegion {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 2.0)]
        delta: f64,
    },
    /// Re-check a trace CSV against the solver invariants.
    Audit {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Which repetition of the config produced the trace.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
}

#[derive(Serialize)]
struct Report {
    problem: String,
    algorithm: &'static str,
    seed: u64,
    termination: Termination,
    message: Option<String>,
    final_r: f64,
    iterations: usize,
    rate: Option<proxnewton::analysis::RateEstimate>,
    rate_error: Option<String>,
    audit: AuditSummary,
}

#[derive(Serialize)]
struct AuditSummary {
    clean: bool,
    violations: Vec<Violation>,
}

#[derive(Serialize)]
struct RegionOutput {
    #[serde(flatten)]
    report: proxnewton::analysis::RegionReport,
    delta: f64,
    delta_min_ok: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::CheckRegion { p, q, rho, delta } => cmd_check_region(p, q, rho, delta),
        Command::Audit { trace, config, index } => cmd_audit(&trace, &config, index),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn to_json<S: Serialize>(value: &S) -> Result<String, String> {
    serde_json::to_string_pretty(value).map_err(|e| e.to_string())
}

fn cmd_run(path: &Path) -> Result<u8, String> {
    let cfg = ExperimentConfig::load(path)?;
    let solver = cfg.solver_config()?;
    // build every instance first so a bad config writes nothing
    let problems = (0..cfg.repeat).map(|i| cfg.build_problem(i)).collect::<Result<Vec<_>, _>>()?;
    let mut dirty = false;
    for (i, problem) in problems.iter().enumerate() {
        let res = run(problem, &problem.start, &solver, cfg.algorithm).map_err(|e| e.to_string())?;
        let trace_path = cfg.trace_path(i);
        create_parent(&trace_path)?;
        res.trace.save(&trace_path).map_err(|e| format!("{}: {e}", trace_path.display()))?;
        let violations = audit_trace(&res.trace, problem, &solver);
        dirty |= !violations.is_empty();
        let (rate, rate_error) = match estimate_rate(&res.trace, DEFAULT_FLOOR) {
            Ok(est) => (Some(est), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let report = Report {
            problem: problem.name.clone(),
            algorithm: cfg.algorithm.name(),
            seed: cfg.problem.seed + i as u64,
            termination: res.termination,
            message: res.message.clone(),
            final_r: res.final_residual(),
            iterations: res.iterations(),
            rate,
            rate_error,
            audit: AuditSummary {
                clean: violations.is_empty(),
                violations,
            },
        };
        let json = to_json(&report)?;
        match cfg.report_path(i) {
            Some(p) => {
                create_parent(&p)?;
                std::fs::write(&p, json + "\n").map_err(|e| format!("{}: {e}", p.display()))?;
            }
            None => println!("{json}"),
        }
    }
    Ok(if dirty { EXIT_VIOLATIONS } else { 0 })
}

fn create_parent(path: &Path) -> Result<(), String> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display())),
        _ => Ok(()),
    }
}

fn cmd_check_region(p: f64, q: f64, rho: f64, delta: f64) -> Result<u8, String> {
    if !delta.is_finite() {
        return Err(format!("delta = {delta} must be finite"));
    }
    let report = check_region(p, q, rho).map_err(|e| e.to_string())?;
    let out = RegionOutput {
        report,
        delta,
        delta_min_ok: report.delta_min_ok(delta),
    };
    println!("{}", to_json(&out)?);
    Ok(if report.feasible_q {
        0
    } else if report.feasible_r {
        EXIT_R_ONLY
    } else {
        EXIT_INFEASIBLE
    })
}

fn cmd_audit(trace_path: &Path, config_path: &Path, index: usize) -> Result<u8, String> {
    let cfg = ExperimentConfig::load(config_path)?;
    let solver = cfg.solver_config()?;
    let problem = cfg.build_problem(index)?;
    let mut trace = Trace::load(trace_path).map_err(|e| format!("{}: {e}", trace_path.display()))?;
    trace.algorithm = Some(cfg.algorithm);
    let violations = audit_trace(&trace, &problem, &solver);
    println!("{}", to_json(&violations)?);
    Ok(if violations.is_empty() { 0 } else { EXIT_VIOLATIONS })
}
