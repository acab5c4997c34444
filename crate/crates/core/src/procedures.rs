// SPDX-License-Identifier: MIT OR Apache-2.0

//! The eight changepoint tests.
//!
//! Every procedure scans a time grid, records one statistic per grid point
//! and compares the maximum with a threshold. Thresholds are expressed as a
//! multiple of a procedure-specific scale (the rate the statistic is measured
//! against), so a constant `C` supplied by the user and a constant calibrated
//! by simulation are interchangeable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{
    centered_sum_of_squares, f_a, g_a_window, g_a_with_window, loglog8n, median_correct, threshold_stat, time_grid,
    GridKind, NeumaierSum, ObservationMatrix, PrefixSums, TimeGrid, TruncationLevel,
};
use crate::rates::{loglog_n, rate_rstar, sparsity_grid, threshold_a, ProblemSize};
use crate::spatial::{robust_functionals, SpatialFunctionals};

pub const DEFAULT_DELTA1: f64 = 0.1;
pub const DEFAULT_DELTA2: f64 = 0.1;
pub const DEFAULT_C_PRIME: f64 = 2.0;
/// Default constant `c` in the `lnln(8n)/p > c` warning of the equicorrelated test.
pub const DEFAULT_EQUICORR_WARN: f64 = 1.0;
/// Constant of the truncated chi-squared tail used by the sparse asymptotic test.
pub const SPARSE_ASYM_CONSTANT: f64 = 9.0;

/// How the threshold of an outcome was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    Constant,
    Calibrated,
    Absolute,
    Asymptotic,
}

/// Threshold request.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Threshold {
    /// `C · scale` for a user-supplied `C > 0`.
    Constant(f64),
    /// `Ĉ · scale` for a constant obtained from null simulation.
    Calibrated(f64),
    /// The given value, independent of the scale.
    Absolute(f64),
    /// The limiting threshold of an asymptotic procedure (`1 · scale`).
    Asymptotic,
}

impl Threshold {
    fn resolve(self, scale: f64, asymptotic: bool) -> Result<(f64, ThresholdSource)> {
        match self {
            Self::Constant(c) => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::domain(format!("threshold constant must be positive; got {c}")));
                }
                Ok((c * scale, ThresholdSource::Constant))
            }
            Self::Calibrated(c) => {
                if !c.is_finite() {
                    return Err(Error::domain("calibrated constant must be finite"));
                }
                Ok((c * scale, ThresholdSource::Calibrated))
            }
            Self::Absolute(r) => {
                if !r.is_finite() {
                    return Err(Error::domain("absolute threshold must be finite"));
                }
                Ok((r, ThresholdSource::Absolute))
            }
            Self::Asymptotic => {
                if !asymptotic {
                    return Err(Error::domain(
                        "only the asymptotic procedures have a parameter-free threshold",
                    ));
                }
                Ok((scale, ThresholdSource::Asymptotic))
            }
        }
    }
}

/// Result of running one procedure on one data set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub procedure: String,
    /// Sparsity the statistic was tuned for, where applicable.
    pub sparsity: Option<usize>,
    pub grid: TimeGrid,
    pub per_t: Vec<(usize, f64)>,
    pub max_stat: f64,
    pub threshold: f64,
    /// Threshold per unit constant.
    pub scale: f64,
    pub threshold_source: ThresholdSource,
    pub reject: bool,
    /// All columns identical: statistics sit at their minimum and the test
    /// never rejects.
    pub degenerate: bool,
    /// Plug-in functionals, for the estimated-covariance test.
    pub functionals: Option<SpatialFunctionals>,
    pub warnings: Vec<String>,
    /// Fixed-sparsity tests combined by the adaptive test, in grid order.
    pub sub_outcomes: Vec<TestOutcome>,
}

/// Statistic profile before a threshold is applied.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub sparsity: Option<usize>,
    pub grid: TimeGrid,
    pub per_t: Vec<(usize, f64)>,
    pub max_stat: f64,
    pub scale: f64,
    pub degenerate: bool,
    pub functionals: Option<SpatialFunctionals>,
    pub warnings: Vec<String>,
    pub sub: Vec<Evaluation>,
}

impl Evaluation {
    fn new(grid: TimeGrid, per_t: Vec<(usize, f64)>, scale: f64, x: &ObservationMatrix) -> Self {
        let max_stat = per_t.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
        Self {
            sparsity: None,
            grid,
            per_t,
            max_stat,
            scale,
            degenerate: x.has_identical_columns(),
            functionals: None,
            warnings: Vec::new(),
            sub: Vec::new(),
        }
    }

    /// `max_stat / scale`, the quantity a calibrated constant is read from.
    pub fn normalized(&self) -> f64 {
        self.max_stat / self.scale
    }
}

/// A procedure together with its tuning, minus the threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Procedure {
    Fixed {
        s: usize,
    },
    Adaptive,
    DenseAsym {
        #[serde(default = "default_delta1")]
        delta1: f64,
        #[serde(default = "default_delta2")]
        delta2: f64,
    },
    SparseAsym {
        s: usize,
        #[serde(default = "default_delta2")]
        delta2: f64,
    },
    SpatialKnown {
        functionals: SpatialFunctionals,
    },
    SpatialEstimated,
    Equicorr {
        gamma: f64,
        s: usize,
        #[serde(default = "default_c_prime")]
        c_prime: f64,
        #[serde(default = "default_warn")]
        warn_constant: f64,
    },
    Temporal {
        b: f64,
    },
}

fn default_delta1() -> f64 {
    DEFAULT_DELTA1
}
fn default_delta2() -> f64 {
    DEFAULT_DELTA2
}
fn default_c_prime() -> f64 {
    DEFAULT_C_PRIME
}
fn default_warn() -> f64 {
    DEFAULT_EQUICORR_WARN
}

impl Procedure {
    pub const NAMES: [&'static str; 8] = [
        "fixed",
        "adaptive",
        "dense_asym",
        "sparse_asym",
        "spatial_known",
        "spatial_estimated",
        "equicorr",
        "temporal",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Fixed { .. } => "fixed",
            Self::Adaptive => "adaptive",
            Self::DenseAsym { .. } => "dense_asym",
            Self::SparseAsym { .. } => "sparse_asym",
            Self::SpatialKnown { .. } => "spatial_known",
            Self::SpatialEstimated => "spatial_estimated",
            Self::Equicorr { .. } => "equicorr",
            Self::Temporal { .. } => "temporal",
        }
    }

    /// Procedures whose threshold has a parameter-free limiting form.
    pub fn is_asymptotic(&self) -> bool {
        matches!(self, Self::DenseAsym { .. } | Self::SparseAsym { .. })
    }

    /// Whether the threshold scale is estimated from the data.
    pub fn scale_depends_on_data(&self) -> bool {
        matches!(self, Self::SpatialEstimated)
    }

    /// Threshold scale for a `p × n` input, or `None` when it is estimated
    /// from the data.
    pub fn nominal_scale(&self, p: usize, n: usize) -> Result<Option<f64>> {
        Ok(Some(match self {
            Self::Fixed { s } => rate_rstar(&ProblemSize::new(p, n, *s)?),
            Self::Adaptive => 1.0,
            Self::DenseAsym { delta1, .. } => dense_asym_scale(p, n, *delta1)?,
            Self::SparseAsym { s, .. } => sparse_asym_tuning(p, n, *s)?.1,
            Self::SpatialKnown { functionals } => spatial_scale(functionals, n),
            Self::SpatialEstimated => return Ok(None),
            Self::Equicorr { gamma, s, .. } => equicorr_tuning(p, n, *s, *gamma)?.1,
            Self::Temporal { b } => temporal_scale(p, n, *b)?,
        }))
    }

    /// Computes the statistic profile.
    pub fn evaluate(&self, x: &ObservationMatrix) -> Result<Evaluation> {
        match self {
            Self::Fixed { s } => eval_fixed(x, *s),
            Self::Adaptive => eval_adaptive(x),
            Self::DenseAsym { delta1, delta2 } => eval_dense_asym(x, *delta1, *delta2),
            Self::SparseAsym { s, delta2 } => eval_sparse_asym(x, *s, *delta2),
            Self::SpatialKnown { functionals } => eval_spatial_known(x, functionals),
            Self::SpatialEstimated => eval_spatial_estimated(x),
            Self::Equicorr {
                gamma,
                s,
                c_prime,
                warn_constant,
            } => eval_equicorr(x, *gamma, *s, *c_prime, *warn_constant),
            Self::Temporal { b } => eval_temporal(x, *b),
        }
    }

    /// Applies `threshold` to an evaluation produced by [`Procedure::evaluate`].
    pub fn decide(&self, eval: Evaluation, threshold: Threshold) -> Result<TestOutcome> {
        let (thr, source) = threshold.resolve(eval.scale, self.is_asymptotic())?;
        let sub_outcomes = if let Self::Adaptive = self {
            // The adaptive statistic is already normalized, so `thr` is the
            // constant handed to every fixed-sparsity test.
            let sub_threshold = Threshold::Calibrated(thr);
            eval.sub
                .into_iter()
                .map(|e| {
                    let s = e.sparsity.expect("sub-evaluations carry their sparsity");
                    let mut out = Self::Fixed { s }.decide(e, sub_threshold)?;
                    out.threshold_source = source;
                    Ok(out)
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let reject = if eval.degenerate {
            false
        } else if let Self::Adaptive = self {
            sub_outcomes.iter().any(|o| o.reject)
        } else {
            eval.max_stat > thr
        };
        Ok(TestOutcome {
            procedure: self.name().to_string(),
            sparsity: eval.sparsity,
            grid: eval.grid,
            per_t: eval.per_t,
            max_stat: eval.max_stat,
            threshold: thr,
            scale: eval.scale,
            threshold_source: source,
            reject,
            degenerate: eval.degenerate,
            functionals: eval.functionals,
            warnings: eval.warnings,
            sub_outcomes,
        })
    }

    pub fn run(&self, x: &ObservationMatrix, threshold: Threshold) -> Result<TestOutcome> {
        let eval = self.evaluate(x)?;
        self.decide(eval, threshold)
    }
}

fn dyadic(n: usize) -> TimeGrid {
    time_grid(n, GridKind::Dyadic).expect("observation matrices have n >= 2")
}

/// Evaluates `stat(Y_t)` on the dyadic grid.
fn scan_cusum<F>(x: &ObservationMatrix, mut stat: F) -> (TimeGrid, Vec<(usize, f64)>)
where
    F: FnMut(&[f64]) -> f64,
{
    let grid = dyadic(x.n());
    let sums = PrefixSums::new(x);
    let mut y = vec![0.0; x.p()];
    let per_t = grid
        .iter()
        .map(|t| {
            sums.cusum_into(t, &mut y);
            (t, stat(&y))
        })
        .collect();
    (grid, per_t)
}

fn scan_normalized<F>(x: &ObservationMatrix, grid: &TimeGrid, mut stat: F) -> Vec<(usize, f64)>
where
    F: FnMut(&[f64]) -> f64,
{
    let sums = PrefixSums::new(x);
    let mut y = vec![0.0; x.p()];
    grid.iter()
        .map(|t| {
            sums.normalized_cusum_into(t, &mut y);
            (t, stat(&y))
        })
        .collect()
}

fn eval_fixed(x: &ObservationMatrix, s: usize) -> Result<Evaluation> {
    let sz = ProblemSize::new(x.p(), x.n(), s)?;
    let level = threshold_a(&sz);
    let (grid, per_t) = scan_cusum(x, |y| threshold_stat(y, &level));
    let mut eval = Evaluation::new(grid, per_t, rate_rstar(&sz), x);
    eval.sparsity = Some(s);
    Ok(eval)
}

fn eval_adaptive(x: &ObservationMatrix) -> Result<Evaluation> {
    let (p, n) = (x.p(), x.n());
    let sizes = sparsity_grid(p, n)?
        .into_iter()
        .map(|s| ProblemSize::new(p, n, s))
        .collect::<Result<Vec<_>>>()?;
    let levels: Vec<TruncationLevel> = sizes.iter().map(threshold_a).collect();
    let rates: Vec<f64> = sizes.iter().map(rate_rstar).collect();
    // One CUSUM pass shared by every sparsity level.
    let mut stats: Vec<Vec<(usize, f64)>> = vec![Vec::new(); sizes.len()];
    let (grid, per_t) = scan_cusum(x, |y| {
        let mut best = f64::NEG_INFINITY;
        for (i, level) in levels.iter().enumerate() {
            let v = threshold_stat(y, level);
            stats[i].push((0, v));
            best = best.max(v / rates[i]);
        }
        best
    });
    let sub = sizes
        .iter()
        .zip(stats)
        .zip(&rates)
        .map(|((sz, mut st), &rate)| {
            for ((t, _), slot) in per_t.iter().zip(st.iter_mut()) {
                slot.0 = *t;
            }
            let mut e = Evaluation::new(grid.clone(), st, rate, x);
            e.sparsity = Some(sz.s);
            e
        })
        .collect();
    let mut eval = Evaluation::new(grid, per_t, 1.0, x);
    eval.sub = sub;
    Ok(eval)
}

fn eval_dense_asym(x: &ObservationMatrix, delta1: f64, delta2: f64) -> Result<Evaluation> {
    let scale = dense_asym_scale(x.p(), x.n(), delta1)?;
    let grid = time_grid(x.n(), GridKind::Geometric { delta2 })?;
    if grid.is_empty() {
        return Err(Error::domain("geometric grid is empty"));
    }
    let pf = x.p() as f64;
    let per_t = scan_normalized(x, &grid, |y| centered_sum_of_squares(y, pf));
    Ok(Evaluation::new(grid, per_t, scale, x))
}

fn dense_asym_scale(p: usize, n: usize, delta1: f64) -> Result<f64> {
    if !(delta1 > 0.0 && delta1.is_finite()) {
        return Err(Error::domain(format!("delta1 must be positive; got {delta1}")));
    }
    Ok(2.0 * ((1.0 + delta1) * p as f64 * loglog_n(n)?).sqrt())
}

/// Truncation level and threshold of the sparse asymptotic test.
fn sparse_asym_tuning(p: usize, n: usize, s: usize) -> Result<(TruncationLevel, f64)> {
    if s == 0 || s >= p {
        return Err(Error::domain(format!("sparse asymptotic test needs 1 <= s < p; got s={s}, p={p}")));
    }
    let ll = loglog_n(n)?;
    let arg = p as f64 * ll / (s * s) as f64;
    if !(arg > 1.0) {
        return Err(Error::domain(format!(
            "sparse asymptotic test needs p·lnln n/s² > 1; got {arg}"
        )));
    }
    let level = TruncationLevel::new((2.0 * arg.ln()).sqrt())?;
    let tail = p as f64 * (-level.a * level.a / 2.0).exp();
    let scale = SPARSE_ASYM_CONSTANT * ((tail * 2.0 * ll).sqrt() + 2.0 * ll);
    Ok((level, scale))
}

fn eval_sparse_asym(x: &ObservationMatrix, s: usize, delta2: f64) -> Result<Evaluation> {
    let (level, scale) = sparse_asym_tuning(x.p(), x.n(), s)?;
    let grid = time_grid(x.n(), GridKind::Geometric { delta2 })?;
    if grid.is_empty() {
        return Err(Error::domain("geometric grid is empty"));
    }
    let per_t = scan_normalized(x, &grid, |y| {
        y.iter().map(|&v| f_a(v, &level)).collect::<NeumaierSum>().total()
    });
    let mut eval = Evaluation::new(grid, per_t, scale, x);
    eval.sparsity = Some(s);
    Ok(eval)
}

fn spatial_scale(f: &SpatialFunctionals, n: usize) -> f64 {
    let l = loglog8n(n);
    (f.frobenius * l.sqrt()).max(f.operator * l)
}

fn eval_spatial_known(x: &ObservationMatrix, f: &SpatialFunctionals) -> Result<Evaluation> {
    if !f.is_consistent(x.p(), 1e-9) {
        return Err(Error::domain(format!("inconsistent spatial functionals: {f:?}")));
    }
    let trace = f.trace;
    let (grid, per_t) = scan_cusum(x, |y| centered_sum_of_squares(y, trace));
    let mut eval = Evaluation::new(grid, per_t, spatial_scale(f, x.n()), x);
    eval.functionals = Some(*f);
    Ok(eval)
}

fn eval_spatial_estimated(x: &ObservationMatrix) -> Result<Evaluation> {
    let f = robust_functionals(x)?;
    let trace = f.trace;
    let (grid, per_t) = scan_cusum(x, |y| centered_sum_of_squares(y, trace));
    let mut eval = Evaluation::new(grid, per_t, spatial_scale(&f, x.n()), x);
    eval.functionals = Some(f);
    Ok(eval)
}

fn eval_equicorr(
    x: &ObservationMatrix,
    gamma: f64,
    s: usize,
    c_prime: f64,
    warn_constant: f64,
) -> Result<Evaluation> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::domain(format!("gamma must lie in [0, 1); got {gamma}")));
    }
    if !(c_prime >= 0.0 && c_prime.is_finite()) {
        return Err(Error::domain(format!("C' must be finite and >= 0; got {c_prime}")));
    }
    let (p, n) = (x.p(), x.n());
    let (level, scale) = equicorr_tuning(p, n, s, gamma)?;
    let l = loglog8n(n);
    let w = g_a_window(c_prime, p, n);
    let mut warnings = Vec::new();
    if s as f64 > (p as f64 * l).powf(0.2) {
        warnings.push(format!(
            "s = {s} exceeds (p·lnln(8n))^(1/5) = {:.3}; guarantees need sparser signals",
            (p as f64 * l).powf(0.2)
        ));
    }
    if l / p as f64 > warn_constant {
        warnings.push(format!(
            "lnln(8n)/p = {:.3} exceeds {warn_constant}; n may be too large relative to p",
            l / p as f64
        ));
    }
    let mut failure = None;
    let (grid, per_t) = scan_cusum(x, |y| match median_correct(y, gamma) {
        Ok(z) => z
            .iter()
            .map(|&v| g_a_with_window(v, &level, w))
            .collect::<NeumaierSum>()
            .total(),
        Err(e) => {
            failure = Some(e);
            f64::NAN
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let mut eval = Evaluation::new(grid, per_t, scale, x);
    eval.sparsity = Some(s);
    eval.warnings = warnings;
    Ok(eval)
}

/// `a² = 4 ln(e p L/s²)` (clamped at 0) and `(1 − γ)·max(s ln(e p L/s²), L)`.
fn equicorr_tuning(p: usize, n: usize, s: usize, gamma: f64) -> Result<(TruncationLevel, f64)> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::domain(format!("gamma must lie in [0, 1); got {gamma}")));
    }
    let sz = ProblemSize::new(p, n, s)?;
    let l = sz.loglog();
    let log_term = (std::f64::consts::E * p as f64 * l / (s * s) as f64).ln();
    let level = TruncationLevel::from_squared(4.0 * log_term)?;
    Ok((level, (1.0 - gamma) * (s as f64 * log_term).max(l)))
}

fn temporal_scale(p: usize, n: usize, b: f64) -> Result<f64> {
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::domain(format!("B must be finite and >= 0; got {b}")));
    }
    let (pf, l) = (p as f64, loglog8n(n));
    Ok(b * pf + (1.0 + b) * ((pf * l).sqrt() + l))
}

fn eval_temporal(x: &ObservationMatrix, b: f64) -> Result<Evaluation> {
    let scale = temporal_scale(x.p(), x.n(), b)?;
    let pf = x.p() as f64;
    let (grid, per_t) = scan_cusum(x, |y| centered_sum_of_squares(y, pf));
    Ok(Evaluation::new(grid, per_t, scale, x))
}

/// Fixed-sparsity test with threshold `C·r*(p, n, s)`.
pub fn test_fixed(x: &ObservationMatrix, s: usize, c: f64) -> Result<TestOutcome> {
    Procedure::Fixed { s }.run(x, Threshold::Constant(c))
}

/// Rejects when some fixed-sparsity test over the sparsity grid rejects.
pub fn test_adaptive(x: &ObservationMatrix, c: f64) -> Result<TestOutcome> {
    Procedure::Adaptive.run(x, Threshold::Constant(c))
}

/// `max ‖Ỹ_t‖² − p` over the geometric grid against `2√((1+δ₁)·p·lnln n)`.
pub fn test_dense_asym(x: &ObservationMatrix, delta1: f64, delta2: f64) -> Result<TestOutcome> {
    Procedure::DenseAsym { delta1, delta2 }.run(x, Threshold::Asymptotic)
}

/// Thresholded statistic over the geometric grid at `a = √(2 ln(p·lnln n/s²))`.
pub fn test_sparse_asym(x: &ObservationMatrix, s: usize, delta2: f64) -> Result<TestOutcome> {
    Procedure::SparseAsym { s, delta2 }.run(x, Threshold::Asymptotic)
}

pub fn test_spatial_known(
    x: &ObservationMatrix,
    functionals: &SpatialFunctionals,
    c: f64,
) -> Result<TestOutcome> {
    Procedure::SpatialKnown {
        functionals: *functionals,
    }
    .run(x, Threshold::Constant(c))
}

/// Known-covariance test with block-median plug-in functionals.
pub fn test_spatial_estimated(x: &ObservationMatrix, c: f64) -> Result<TestOutcome> {
    Procedure::SpatialEstimated.run(x, Threshold::Constant(c))
}

pub fn test_equicorr(
    x: &ObservationMatrix,
    gamma: f64,
    s: usize,
    c: f64,
    c_prime: f64,
) -> Result<TestOutcome> {
    Procedure::Equicorr {
        gamma,
        s,
        c_prime,
        warn_constant: DEFAULT_EQUICORR_WARN,
    }
    .run(x, Threshold::Constant(c))
}

pub fn test_temporal(x: &ObservationMatrix, b: f64, c: f64) -> Result<TestOutcome> {
    Procedure::Temporal { b }.run(x, Threshold::Constant(c))
}
