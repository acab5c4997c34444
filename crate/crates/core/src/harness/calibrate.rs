// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use super::cell::CellProcedure;
use crate::error::{Error, Result};
use crate::parallel::par_map_indexed;
use crate::procedures::{Procedure, Threshold};
use crate::simgen::{derive_seed, rng_from_seed, sample_null, CovarianceSpec, NoiseSampler};

/// Smallest replication count accepted for calibration or reported frequencies.
pub const MIN_REPLICATIONS: usize = 100;

/// Null-calibrated threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub alpha: f64,
    pub replications: usize,
    /// 1-based order statistic `⌈(1 − α)R⌉` the threshold was read from.
    pub order_index: usize,
    /// Calibrated constant `Ĉ`; the threshold is `Ĉ·scale`.
    pub constant: f64,
    /// Absolute threshold, when the scale does not depend on the data.
    pub threshold: Option<f64>,
    /// `true` when `max_stat/scale` rather than `max_stat` was calibrated.
    pub normalized: bool,
}

impl Calibration {
    pub fn threshold_spec(&self) -> Threshold {
        Threshold::Calibrated(self.constant)
    }
}

/// `⌈(1 − α)R⌉` as a 1-based index into the ascending order statistics.
pub fn quantile_index(alpha: f64, reps: usize) -> usize {
    // Guard against 0.95·2000 = 1900.0000000000002 style rounding.
    let target = (1.0 - alpha) * reps as f64;
    let rounded = target.round();
    let k = if (target - rounded).abs() < 1e-9 * reps as f64 {
        rounded
    } else {
        target.ceil()
    };
    (k as usize).clamp(1, reps)
}

/// Empirical `(1 − α)` quantile by the order-statistic convention.
pub fn empirical_quantile(values: &[f64], alpha: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[quantile_index(alpha, values.len()) - 1]
}

pub(crate) fn check_alpha_reps(alpha: f64, reps: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha must lie in (0, 1); got {alpha}")));
    }
    if reps < MIN_REPLICATIONS {
        return Err(Error::config(format!(
            "need at least {MIN_REPLICATIONS} replications; got {reps}"
        )));
    }
    Ok(())
}

/// Calibrates a cell procedure on `reps` null data sets. Replication `i`
/// draws its noise from `derive_seed(seed, [i])`.
pub(crate) fn calibrate_cell(
    procedure: &CellProcedure,
    p: usize,
    n: usize,
    noise: &CovarianceSpec,
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<Calibration> {
    check_alpha_reps(alpha, reps)?;
    let sampler = NoiseSampler::new(noise, p)?;
    let zero = vec![0.0; p];
    let normalized = procedure.scale_depends_on_data();
    let fixed_scale = procedure.nominal_scale(p, n)?;
    let stats = par_map_indexed(reps, |i| -> Result<f64> {
        let mut rng = rng_from_seed(derive_seed(seed, &[i as u64]));
        let x = sample_null(&sampler, n, &zero, &mut rng)?;
        let eval = procedure.evaluate(&x)?;
        Ok(if normalized { eval.normalized() } else { eval.max_stat })
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    if stats.iter().any(|v| v.is_nan()) {
        return Err(Error::domain("null statistic is undefined on some replication"));
    }
    let order_index = quantile_index(alpha, reps);
    let q = empirical_quantile(&stats, alpha);
    let (constant, threshold) = match (normalized, fixed_scale) {
        (false, Some(scale)) => (q / scale, Some(q)),
        _ => (q, None),
    };
    Ok(Calibration {
        alpha,
        replications: reps,
        order_index,
        constant,
        threshold,
        normalized,
    })
}

/// Empirical `(1 − α)` quantile of the null max statistic of `procedure`.
pub fn calibrate(
    procedure: &Procedure,
    p: usize,
    n: usize,
    noise: &CovarianceSpec,
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<Calibration> {
    calibrate_cell(&CellProcedure::plain(procedure.clone()), p, n, noise, alpha, reps, seed)
}
