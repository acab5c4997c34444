// SPDX-License-Identifier: MIT OR Apache-2.0

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::calibrate::calibrate_cell;
use super::cell::CellProcedure;
use super::config::{ExperimentConfig, SignalKind, ThresholdMode};
use crate::error::{Error, Result};
use crate::kernels::ObservationMatrix;
use crate::parallel::par_map_indexed;
use crate::procedures::{Threshold, ThresholdSource};
use crate::rates::{asymptotic_boundary, ProblemSize, Regime};
use crate::simgen::{
    derive_seed, rng_from_seed, sample_null, AlternativeSpec, NoiseSampler, SEED_SCHEME_VERSION,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Seed path purposes; the full path is `[purpose, p, n, s, rep]`.
const PURPOSE_CALIBRATION: u64 = 0;
const PURPOSE_REPLICATION: u64 = 1;

/// An empirical frequency `count / reps` with binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub count: usize,
    pub reps: usize,
    pub rate: f64,
    /// `√(f(1 − f)/R)`.
    pub se: f64,
}

impl Frequency {
    pub fn new(count: usize, reps: usize) -> Self {
        let rate = count as f64 / reps as f64;
        Self {
            count,
            reps,
            rate,
            se: (rate * (1.0 - rate) / reps as f64).sqrt(),
        }
    }

    /// `1 − f` over the same replications.
    pub fn complement(&self) -> Self {
        Self::new(self.reps - self.count, self.reps)
    }
}

/// One row of a report: a `(p, n, s)` problem, optionally with one
/// changepoint location and one signal strength.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub p: usize,
    pub n: usize,
    pub s: usize,
    pub t0: Option<usize>,
    pub procedure: String,
    pub signal_kind: Option<SignalKind>,
    pub signal_value: Option<f64>,
    pub rho2: Option<f64>,
    pub threshold_source: Option<ThresholdSource>,
    /// `C` or `Ĉ`.
    pub constant: Option<f64>,
    /// Absolute threshold, when the scale does not depend on the data.
    pub threshold: Option<f64>,
    pub type1: Option<Frequency>,
    pub power: Option<Frequency>,
    pub type2: Option<Frequency>,
    pub error: Option<String>,
    /// Wall time of the whole `(p, n, s)` group, in milliseconds.
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seed: u64,
    pub version: String,
    pub seed_scheme_version: u32,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub metadata: ReportMetadata,
    pub config: ExperimentConfig,
    pub cells: Vec<CellRecord>,
}

impl ExperimentReport {
    /// Copy with every wall-time field zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.cells {
            c.wall_ms = 0.0;
        }
        out
    }
}

struct Resolved {
    threshold: Threshold,
    source: ThresholdSource,
    constant: f64,
    absolute: Option<f64>,
}

fn resolve_threshold(
    cfg: &ExperimentConfig,
    proc: &CellProcedure,
    p: usize,
    n: usize,
    s: usize,
) -> Result<Resolved> {
    match &cfg.threshold {
        ThresholdMode::Calibrate { reps } => {
            let seed = derive_seed(cfg.seed, &[PURPOSE_CALIBRATION, p as u64, n as u64, s as u64]);
            let cal = calibrate_cell(proc, p, n, &cfg.noise, cfg.alpha, *reps, seed)?;
            Ok(Resolved {
                threshold: cal.threshold_spec(),
                source: ThresholdSource::Calibrated,
                constant: cal.constant,
                absolute: cal.threshold,
            })
        }
        ThresholdMode::Constant { value } => Ok(Resolved {
            threshold: Threshold::Constant(*value),
            source: ThresholdSource::Constant,
            constant: *value,
            absolute: proc.nominal_scale(p, n)?.map(|sc| value * sc),
        }),
        ThresholdMode::Asymptotic => {
            if !proc.base.is_asymptotic() {
                return Err(Error::config(format!(
                    "procedure {} has no asymptotic threshold",
                    proc.name()
                )));
            }
            Ok(Resolved {
                threshold: Threshold::Asymptotic,
                source: ThresholdSource::Asymptotic,
                constant: 1.0,
                absolute: proc.nominal_scale(p, n)?,
            })
        }
    }
}

/// `ρ²` for one ladder value.
pub fn signal_rho2(
    kind: SignalKind,
    value: f64,
    sz: &ProblemSize,
    reference_rate: Option<f64>,
    constant: f64,
) -> Result<f64> {
    let reference = || {
        reference_rate.ok_or_else(|| Error::config("procedure has no reference rate for this cell"))
    };
    Ok(match kind {
        SignalKind::Rho2 => value,
        SignalKind::RateMultiple => value * reference()?,
        SignalKind::CalibratedMultiple => value * constant * reference()?,
        SignalKind::XiDense => asymptotic_boundary(Regime::Dense, sz, value)?.powi(2),
        SignalKind::XiSparse => asymptotic_boundary(Regime::Sparse, sz, value)?.powi(2),
    })
}

struct Alternative {
    t0: usize,
    value: f64,
    rho2: f64,
    theta: ObservationMatrix,
}

/// Per-replication result: null decision and one decision per alternative.
type RepResult = Result<(Option<bool>, Vec<bool>)>;

fn run_group(cfg: &ExperimentConfig, p: usize, n: usize, s: usize) -> Result<Vec<CellRecord>> {
    let proc = cfg.procedure.instantiate(p, n, s, &cfg.noise)?;
    let resolved = resolve_threshold(cfg, &proc, p, n, s)?;
    let sz = ProblemSize::new(p, n, s)?;
    let mut alts = Vec::new();
    if let Some(ladder) = cfg.signal.as_ref().filter(|_| cfg.has_signals()) {
        for t0 in cfg.t0.locations(n)? {
            for &value in &ladder.values {
                let rho2 = signal_rho2(ladder.kind, value, &sz, proc.reference_rate, resolved.constant)?;
                let theta = AlternativeSpec::planted(p, n, t0, s, rho2)?.mean_matrix();
                alts.push(Alternative { t0, value, rho2, theta });
            }
        }
    }
    let alt_reps = if alts.is_empty() { 0 } else { cfg.alt_reps };
    let total = cfg.null_reps.max(alt_reps);
    let sampler = NoiseSampler::new(&cfg.noise, p)?;
    let zero = vec![0.0; p];
    let threshold = resolved.threshold;
    let results: Vec<RepResult> = par_map_indexed(total, |i| {
        let seed = derive_seed(
            cfg.seed,
            &[PURPOSE_REPLICATION, p as u64, n as u64, s as u64, i as u64],
        );
        // Null and alternative data share the noise of replication i.
        let noise = sample_null(&sampler, n, &zero, &mut rng_from_seed(seed))?;
        let null = if i < cfg.null_reps {
            Some(proc.run(&noise, threshold)?.reject)
        } else {
            None
        };
        let mut alt = Vec::new();
        if i < alt_reps {
            for a in &alts {
                let x = noise.add(&a.theta)?;
                alt.push(proc.run(&x, threshold)?.reject);
            }
        }
        Ok((null, alt))
    });
    let mut null_count = 0usize;
    let mut alt_counts = vec![0usize; alts.len()];
    for r in results {
        let (null, alt) = r?;
        null_count += usize::from(null == Some(true));
        for (c, rej) in alt_counts.iter_mut().zip(alt) {
            *c += usize::from(rej);
        }
    }
    let type1 = Frequency::new(null_count, cfg.null_reps);
    let base = CellRecord {
        p,
        n,
        s,
        t0: None,
        procedure: proc.name().to_string(),
        signal_kind: None,
        signal_value: None,
        rho2: None,
        threshold_source: Some(resolved.source),
        constant: Some(resolved.constant),
        threshold: resolved.absolute,
        type1: Some(type1),
        power: None,
        type2: None,
        error: None,
        wall_ms: 0.0,
    };
    if alts.is_empty() {
        return Ok(vec![base]);
    }
    let kind = cfg.signal.as_ref().map(|l| l.kind);
    Ok(alts
        .iter()
        .zip(alt_counts)
        .map(|(a, count)| {
            let power = Frequency::new(count, alt_reps);
            CellRecord {
                t0: Some(a.t0),
                signal_kind: kind,
                signal_value: Some(a.value),
                rho2: Some(a.rho2),
                power: Some(power),
                type2: Some(power.complement()),
                ..base.clone()
            }
        })
        .collect())
}

fn error_records(cfg: &ExperimentConfig, p: usize, n: usize, s: usize, err: &Error) -> Vec<CellRecord> {
    vec![CellRecord {
        p,
        n,
        s,
        t0: None,
        procedure: cfg.procedure.name().to_string(),
        signal_kind: None,
        signal_value: None,
        rho2: None,
        threshold_source: None,
        constant: None,
        threshold: None,
        type1: None,
        power: None,
        type2: None,
        error: Some(err.to_string()),
        wall_ms: 0.0,
    }]
}

/// Runs every `(p, n, s)` group of `cfg`. A failing group is recorded with
/// its error and the remaining groups still run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for &p in &cfg.p {
        for &n in &cfg.n {
            for &s in &cfg.s {
                let start = Instant::now();
                let mut records = run_group(cfg, p, n, s).unwrap_or_else(|e| {
                    log::warn!("cell p={p} n={n} s={s} failed: {e}");
                    error_records(cfg, p, n, s, &e)
                });
                let ms = start.elapsed().as_secs_f64() * 1e3;
                for r in &mut records {
                    r.wall_ms = ms;
                }
                cells.extend(records);
            }
        }
    }
    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        metadata: ReportMetadata {
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed_scheme_version: SEED_SCHEME_VERSION,
            config_hash: cfg.hash(),
        },
        config: cfg.clone(),
        cells,
    })
}

/// Empirical power over `s` (rows) and signal value (columns) for one
/// `(p, n, t0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub p: usize,
    pub n: usize,
    pub t0: usize,
    pub s_values: Vec<usize>,
    pub signal_values: Vec<f64>,
    /// `power[i][j]` at `s_values[i]`, `signal_values[j]`; `None` for failed cells.
    pub power: Vec<Vec<Option<f64>>>,
    pub power_se: Vec<Vec<Option<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSweep {
    pub report: ExperimentReport,
    pub diagrams: Vec<PhaseDiagram>,
}

/// Runs the experiment and arranges power as `s × signal` matrices.
pub fn sweep_phase(cfg: &ExperimentConfig) -> Result<PhaseSweep> {
    let ladder = cfg
        .signal
        .as_ref()
        .filter(|l| !l.values.is_empty())
        .ok_or_else(|| Error::config("a sweep needs a non-empty signal ladder"))?;
    let report = run_experiment(cfg)?;
    let mut diagrams = Vec::new();
    for &p in &cfg.p {
        for &n in &cfg.n {
            for t0 in cfg.t0.locations(n)? {
                let mut power = vec![vec![None; ladder.values.len()]; cfg.s.len()];
                let mut power_se = power.clone();
                for (i, &s) in cfg.s.iter().enumerate() {
                    for (j, &v) in ladder.values.iter().enumerate() {
                        let hit = report.cells.iter().find(|c| {
                            c.p == p && c.n == n && c.s == s && c.t0 == Some(t0) && c.signal_value == Some(v)
                        });
                        if let Some(f) = hit.and_then(|c| c.power) {
                            power[i][j] = Some(f.rate);
                            power_se[i][j] = Some(f.se);
                        }
                    }
                }
                diagrams.push(PhaseDiagram {
                    p,
                    n,
                    t0,
                    s_values: cfg.s.clone(),
                    signal_values: ladder.values.clone(),
                    power,
                    power_se,
                });
            }
        }
    }
    Ok(PhaseSweep { report, diagrams })
}
