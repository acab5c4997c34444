// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::calibrate::MIN_REPLICATIONS;
use super::cell::ProcedureTemplate;
use crate::error::{Error, Result};
use crate::simgen::CovarianceSpec;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// How signal ladder values translate into `ρ²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    /// The value is `ρ²` itself.
    Rho2,
    /// `ρ² = v · reference rate`.
    RateMultiple,
    /// `ρ² = v · Ĉ · reference rate`, with `Ĉ` the calibrated (or supplied)
    /// threshold constant.
    CalibratedMultiple,
    /// `ρ = ξ·(p·lnln n)^{1/4}`.
    XiDense,
    /// `ρ = ξ·√(s·ln(p·lnln n/s²))`.
    XiSparse,
}

impl SignalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rho2 => "rho2",
            Self::RateMultiple => "rate_multiple",
            Self::CalibratedMultiple => "calibrated_multiple",
            Self::XiDense => "xi_dense",
            Self::XiSparse => "xi_sparse",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        [
            Self::Rho2,
            Self::RateMultiple,
            Self::CalibratedMultiple,
            Self::XiDense,
            Self::XiSparse,
        ]
        .into_iter()
        .find(|k| k.as_str() == text)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalLadder {
    pub kind: SignalKind,
    pub values: Vec<f64>,
}

/// Changepoint locations: explicit positions and/or fractions of `n`
/// (rounded, clamped to `1..=n−1`). Both empty means `n/2`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangepointSpec {
    #[serde(default)]
    pub positions: Vec<usize>,
    #[serde(default)]
    pub fractions: Vec<f64>,
}

impl ChangepointSpec {
    /// Sorted, unique locations for series length `n`.
    pub fn locations(&self, n: usize) -> Result<Vec<usize>> {
        let mut out: Vec<usize> = self.positions.clone();
        let fractions: &[f64] = if self.positions.is_empty() && self.fractions.is_empty() {
            &[0.5]
        } else {
            &self.fractions
        };
        for &f in fractions {
            out.push(((f * n as f64).round() as usize).clamp(1, n - 1));
        }
        if let Some(&t) = out.iter().find(|&&t| t == 0 || t >= n) {
            return Err(Error::config(format!("changepoint {t} outside 1..={}", n - 1)));
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

/// Where thresholds come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdMode {
    /// Null calibration with `reps` data sets at level `alpha`.
    Calibrate { reps: usize },
    /// User-supplied `C`.
    Constant { value: f64 },
    /// Limiting threshold of the asymptotic tests.
    Asymptotic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub procedure: ProcedureTemplate,
    pub p: Vec<usize>,
    pub n: Vec<usize>,
    pub s: Vec<usize>,
    #[serde(default)]
    pub noise: CovarianceSpec,
    #[serde(default)]
    pub signal: Option<SignalLadder>,
    #[serde(default)]
    pub t0: ChangepointSpec,
    pub threshold: ThresholdMode,
    #[serde(default = "alpha")]
    pub alpha: f64,
    pub null_reps: usize,
    #[serde(default)]
    pub alt_reps: usize,
    pub seed: u64,
}

fn schema_version() -> u32 {
    CONFIG_SCHEMA_VERSION
}
fn alpha() -> f64 {
    0.05
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn has_signals(&self) -> bool {
        self.signal.as_ref().is_some_and(|l| !l.values.is_empty())
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported config schema version {}",
                self.schema_version
            )));
        }
        if self.p.is_empty() || self.n.is_empty() || self.s.is_empty() {
            return Err(Error::config("p, n and s lists must be non-empty"));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::config(format!("alpha must lie in (0, 0.5); got {}", self.alpha)));
        }
        if self.null_reps < MIN_REPLICATIONS {
            return Err(Error::config(format!(
                "null_reps must be at least {MIN_REPLICATIONS}; got {}",
                self.null_reps
            )));
        }
        if self.has_signals() && self.alt_reps < MIN_REPLICATIONS {
            return Err(Error::config(format!(
                "alt_reps must be at least {MIN_REPLICATIONS} when a signal ladder is given; got {}",
                self.alt_reps
            )));
        }
        if let Some(ladder) = &self.signal {
            if ladder.values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::config("signal ladder values must be finite and >= 0"));
            }
        }
        match &self.threshold {
            ThresholdMode::Calibrate { reps } if *reps < MIN_REPLICATIONS => {
                return Err(Error::config(format!(
                    "calibration reps must be at least {MIN_REPLICATIONS}; got {reps}"
                )));
            }
            ThresholdMode::Constant { value } if !(value.is_finite() && *value > 0.0) => {
                return Err(Error::config("threshold constant must be positive"));
            }
            _ => {}
        }
        if self.n.iter().any(|&n| n < 2) {
            return Err(Error::config("every n must be at least 2"));
        }
        for &f in &self.t0.fractions {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::config(format!("changepoint fractions must lie in (0, 1); got {f}")));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization, hex encoded.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("configs serialize");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
