// SPDX-License-Identifier: MIT OR Apache-2.0

//! `cpminimax`: run changepoint tests on matrix files, calibrate thresholds
//! and drive config-based Monte Carlo experiments.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use cpminimax_core::harness::{
    calibrate, export, export_phase, read_matrix, run_experiment, sweep_phase, write_matrix,
    ExperimentConfig, Format, ProcedureTemplate,
};
use cpminimax_core::procedures::{DEFAULT_C_PRIME, DEFAULT_DELTA1, DEFAULT_DELTA2, DEFAULT_EQUICORR_WARN};
use cpminimax_core::simgen::{gen_alternative, gen_null, AlternativeSpec, CovarianceSpec};
use cpminimax_core::Threshold;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "cpminimax", version, about = "High-dimensional changepoint tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Null-calibrate a procedure's threshold by simulation.
    Calibrate(CalibrateArgs),
    /// Run a procedure on a matrix file and print a JSON verdict.
    Test(TestArgs),
    /// Run a JSON-configured experiment and write report.csv / report.json.
    Experiment(RunArgs),
    /// Run a phase sweep and additionally write phase.csv / phase.json.
    Sweep(RunArgs),
    /// Write a simulated matrix file (CSV, or binary for a `.bin` path).
    Simulate(SimulateArgs),
}

#[derive(Args, Clone)]
struct Tuning {
    /// Procedure: fixed, adaptive, dense_asym, sparse_asym, spatial_known,
    /// spatial_estimated, equicorr, temporal.
    #[arg(long = "proc")]
    procedure: String,
    /// Sparsity (fixed, sparse_asym, equicorr).
    #[arg(long)]
    s: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_DELTA1)]
    delta1: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA2)]
    delta2: f64,
    /// Equicorrelation for equicorr; defaults to the noise model's.
    #[arg(long)]
    gamma: Option<f64>,
    /// Estimate γ from each data set (equicorr).
    #[arg(long)]
    estimate_gamma: bool,
    #[arg(long, default_value_t = DEFAULT_C_PRIME)]
    c_prime: f64,
    #[arg(long, default_value_t = DEFAULT_EQUICORR_WARN)]
    warn_constant: f64,
    /// Temporal dependence budget for temporal; defaults to the noise model's.
    #[arg(long)]
    b: Option<f64>,
    /// Noise model: identity, equicorr:<γ>, temporal:<B>, explicit:<csv path>.
    #[arg(long, default_value = "identity")]
    noise: String,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    tuning: Tuning,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    tuning: Tuning,
    /// Matrix file: CSV (p rows, n columns) or CPMX0001 binary.
    #[arg(long)]
    input: PathBuf,
    /// `auto` (asymptotic threshold or null calibration) or an absolute value.
    #[arg(long, default_value = "auto")]
    threshold: String,
    /// Threshold constant C; overrides --threshold.
    #[arg(long)]
    constant: Option<f64>,
    /// Level used by automatic calibration.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Null replications used by automatic calibration.
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Omit the per-time statistics from the output.
    #[arg(long)]
    brief: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "identity")]
    noise: String,
    /// Changepoint; omitted means null data.
    #[arg(long)]
    t0: Option<usize>,
    #[arg(long, default_value_t = 1)]
    s: usize,
    #[arg(long, default_value_t = 0.0)]
    rho2: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_noise(text: &str) -> Result<CovarianceSpec> {
    if let Some(path) = text.strip_prefix("explicit:") {
        let m = read_matrix(Path::new(path))?;
        let rows = (0..m.p()).map(|j| m.row(j)).collect();
        return Ok(CovarianceSpec::Explicit { matrix: rows });
    }
    Ok(text.parse()?)
}

fn template(t: &Tuning) -> Result<ProcedureTemplate> {
    Ok(match t.procedure.as_str() {
        "fixed" => ProcedureTemplate::Fixed,
        "adaptive" => ProcedureTemplate::Adaptive,
        "dense_asym" => ProcedureTemplate::DenseAsym {
            delta1: t.delta1,
            delta2: t.delta2,
        },
        "sparse_asym" => ProcedureTemplate::SparseAsym { delta2: t.delta2 },
        "spatial_known" => ProcedureTemplate::SpatialKnown,
        "spatial_estimated" => ProcedureTemplate::SpatialEstimated,
        "equicorr" => ProcedureTemplate::Equicorr {
            gamma: t.gamma,
            estimate_gamma: t.estimate_gamma,
            c_prime: t.c_prime,
            warn_constant: t.warn_constant,
        },
        "temporal" => ProcedureTemplate::Temporal { b: t.b },
        other => bail!(
            "unknown procedure {other:?}; expected one of {}",
            cpminimax_core::Procedure::NAMES.join(", ")
        ),
    })
}

fn sparsity(t: &Tuning, p: usize) -> Result<usize> {
    let needs_s = matches!(t.procedure.as_str(), "fixed" | "sparse_asym" | "equicorr");
    match t.s {
        Some(s) => Ok(s),
        None if needs_s => bail!("--s is required for procedure {}", t.procedure),
        None => Ok(p),
    }
}

fn run_calibrate(args: CalibrateArgs) -> Result<Value> {
    let noise = parse_noise(&args.tuning.noise)?;
    let s = sparsity(&args.tuning, args.p)?;
    let cell = template(&args.tuning)?.instantiate(args.p, args.n, s, &noise)?;
    if cell.estimate_gamma {
        bail!("calibration with per-data-set gamma estimation is only available in experiments");
    }
    let cal = calibrate(&cell.base, args.p, args.n, &noise, args.alpha, args.reps, args.seed)?;
    Ok(json!({
        "procedure": cell.base,
        "p": args.p,
        "n": args.n,
        "noise": noise,
        "seed": args.seed,
        "calibration": cal,
    }))
}

fn run_test(args: TestArgs) -> Result<Value> {
    let x = read_matrix(&args.input)?;
    let (p, n) = (x.p(), x.n());
    let noise = parse_noise(&args.tuning.noise)?;
    let s = sparsity(&args.tuning, p)?;
    let cell = template(&args.tuning)?.instantiate(p, n, s, &noise)?;
    let mut calibration = Value::Null;
    let threshold = if let Some(c) = args.constant {
        Threshold::Constant(c)
    } else if args.threshold == "auto" {
        if cell.base.is_asymptotic() {
            Threshold::Asymptotic
        } else {
            if cell.estimate_gamma {
                bail!("--threshold auto cannot calibrate with --estimate-gamma; pass --constant");
            }
            let cal = calibrate(&cell.base, p, n, &noise, args.alpha, args.reps, args.seed)?;
            calibration = serde_json::to_value(&cal)?;
            cal.threshold_spec()
        }
    } else {
        let v: f64 = args
            .threshold
            .parse()
            .with_context(|| format!("--threshold must be `auto` or a number, got {:?}", args.threshold))?;
        Threshold::Absolute(v)
    };
    let outcome = cell.run(&x, threshold)?;
    for w in &outcome.warnings {
        log::warn!("{w}");
    }
    let mut value = serde_json::to_value(&outcome)?;
    if let Value::Object(map) = &mut value {
        if args.brief {
            map.remove("per_t");
            map.remove("sub_outcomes");
        }
        map.insert("input".into(), json!(args.input));
        map.insert("calibration".into(), calibration);
    }
    Ok(value)
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(path).with_context(|| format!("loading config {}", path.display()))
}

fn run_experiment_cmd(args: RunArgs) -> Result<Value> {
    let cfg = load_config(&args.config)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let report = run_experiment(&cfg)?;
    let csv = args.out.join("report.csv");
    let js = args.out.join("report.json");
    export(&report, Format::Csv, &csv)?;
    export(&report, Format::Json, &js)?;
    let failed = report.cells.iter().filter(|c| c.error.is_some()).count();
    Ok(json!({ "cells": report.cells.len(), "failed": failed, "csv": csv, "json": js }))
}

fn run_sweep_cmd(args: RunArgs) -> Result<Value> {
    let cfg = load_config(&args.config)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let sweep = sweep_phase(&cfg)?;
    export(&sweep.report, Format::Csv, &args.out.join("report.csv"))?;
    export(&sweep.report, Format::Json, &args.out.join("report.json"))?;
    let phase = args.out.join("phase.csv");
    export_phase(&sweep, &phase)?;
    let diagrams = args.out.join("phase.json");
    fs::write(&diagrams, serde_json::to_string_pretty(&sweep.diagrams)?)
        .with_context(|| format!("writing {}", diagrams.display()))?;
    Ok(json!({ "cells": sweep.report.cells.len(), "diagrams": sweep.diagrams.len(), "phase_csv": phase }))
}

fn run_simulate(args: SimulateArgs) -> Result<Value> {
    let noise = parse_noise(&args.noise)?;
    let x = match args.t0 {
        Some(t0) => {
            let alt = AlternativeSpec::planted(args.p, args.n, t0, args.s, args.rho2)?;
            gen_alternative(&alt, &noise, args.seed)?
        }
        None => gen_null(args.p, args.n, &vec![0.0; args.p], &noise, args.seed)?,
    };
    write_matrix(&x, &args.out)?;
    Ok(json!({ "p": args.p, "n": args.n, "out": args.out }))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Calibrate(a) => run_calibrate(a),
        Command::Test(a) => run_test(a),
        Command::Experiment(a) => run_experiment_cmd(a),
        Command::Sweep(a) => run_sweep_cmd(a),
        Command::Simulate(a) => run_simulate(a),
    };
    match result {
        Ok(value) => {
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&value).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
