// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::ObservationMatrix;
use crate::procedures::{
    Evaluation, Procedure, TestOutcome, Threshold, DEFAULT_C_PRIME, DEFAULT_DELTA1,
    DEFAULT_DELTA2, DEFAULT_EQUICORR_WARN,
};
use crate::rates::{rate_rstar, ProblemSize};
use crate::simgen::CovarianceSpec;
use crate::spatial::gamma_estimate;

/// Procedure named in an experiment config. Sparsity comes from the cell,
/// and covariance parameters default to those of the noise model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcedureTemplate {
    Fixed,
    Adaptive,
    DenseAsym {
        #[serde(default = "d1")]
        delta1: f64,
        #[serde(default = "d2")]
        delta2: f64,
    },
    SparseAsym {
        #[serde(default = "d2")]
        delta2: f64,
    },
    /// Uses the exact functionals of the noise covariance.
    SpatialKnown,
    SpatialEstimated,
    Equicorr {
        /// Defaults to the noise model's γ (0 for non-equicorrelated noise).
        #[serde(default)]
        gamma: Option<f64>,
        /// Replace γ by the block-median estimate on every data set.
        #[serde(default)]
        estimate_gamma: bool,
        #[serde(default = "cp")]
        c_prime: f64,
        #[serde(default = "cw")]
        warn_constant: f64,
    },
    Temporal {
        /// Defaults to the noise model's B (0 for other noise).
        #[serde(default)]
        b: Option<f64>,
    },
}

fn d1() -> f64 {
    DEFAULT_DELTA1
}
fn d2() -> f64 {
    DEFAULT_DELTA2
}
fn cp() -> f64 {
    DEFAULT_C_PRIME
}
fn cw() -> f64 {
    DEFAULT_EQUICORR_WARN
}

impl ProcedureTemplate {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Fixed => "fixed",
            Self::Adaptive => "adaptive",
            Self::DenseAsym { .. } => "dense_asym",
            Self::SparseAsym { .. } => "sparse_asym",
            Self::SpatialKnown => "spatial_known",
            Self::SpatialEstimated => "spatial_estimated",
            Self::Equicorr { .. } => "equicorr",
            Self::Temporal { .. } => "temporal",
        }
    }

    /// Builds the procedure for one `(p, n, s)` cell.
    pub fn instantiate(
        &self,
        p: usize,
        n: usize,
        s: usize,
        noise: &CovarianceSpec,
    ) -> Result<CellProcedure> {
        ProblemSize::new(p, n, s)?;
        let base = match self {
            Self::Fixed => Procedure::Fixed { s },
            Self::Adaptive => Procedure::Adaptive,
            Self::DenseAsym { delta1, delta2 } => Procedure::DenseAsym {
                delta1: *delta1,
                delta2: *delta2,
            },
            Self::SparseAsym { delta2 } => Procedure::SparseAsym { s, delta2: *delta2 },
            Self::SpatialKnown => Procedure::SpatialKnown {
                functionals: noise.functionals(p)?,
            },
            Self::SpatialEstimated => Procedure::SpatialEstimated,
            Self::Equicorr {
                gamma,
                estimate_gamma,
                c_prime,
                warn_constant,
            } => {
                let gamma = gamma.unwrap_or(match noise {
                    CovarianceSpec::Equicorrelated { gamma } => *gamma,
                    _ => 0.0,
                });
                let proc = Procedure::Equicorr {
                    gamma,
                    s,
                    c_prime: *c_prime,
                    warn_constant: *warn_constant,
                };
                return Ok(CellProcedure {
                    base: proc,
                    estimate_gamma: *estimate_gamma,
                    reference_rate: None,
                }
                .with_reference(p, n, s));
            }
            Self::Temporal { b } => Procedure::Temporal {
                b: b.unwrap_or(match noise {
                    CovarianceSpec::TemporalBlock { b } => *b,
                    _ => 0.0,
                }),
            },
        };
        let mut cell = CellProcedure::plain(base);
        if let Self::SpatialEstimated = self {
            let f = noise.functionals(p)?;
            cell.reference_rate = Some(
                Procedure::SpatialKnown { functionals: f }
                    .nominal_scale(p, n)?
                    .expect("known functionals give a fixed scale"),
            );
            return Ok(cell);
        }
        Ok(cell.with_reference(p, n, s))
    }
}

/// A procedure as run inside an experiment cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellProcedure {
    pub base: Procedure,
    /// Re-estimate γ per data set (equicorrelated test only).
    pub estimate_gamma: bool,
    /// Rate that signal multiples refer to: `r*(p, n, s)` for the fixed,
    /// adaptive and asymptotic tests, the threshold scale of the true model
    /// otherwise.
    pub reference_rate: Option<f64>,
}

impl CellProcedure {
    pub fn plain(base: Procedure) -> Self {
        Self {
            base,
            estimate_gamma: false,
            reference_rate: None,
        }
    }

    fn with_reference(mut self, p: usize, n: usize, s: usize) -> Self {
        self.reference_rate = match &self.base {
            Procedure::Fixed { .. }
            | Procedure::Adaptive
            | Procedure::DenseAsym { .. }
            | Procedure::SparseAsym { .. } => ProblemSize::new(p, n, s).ok().map(|sz| rate_rstar(&sz)),
            other => other.nominal_scale(p, n).ok().flatten(),
        };
        self
    }

    pub fn name(&self) -> &'static str {
        self.base.name()
    }

    pub fn scale_depends_on_data(&self) -> bool {
        self.estimate_gamma || self.base.scale_depends_on_data()
    }

    pub fn nominal_scale(&self, p: usize, n: usize) -> Result<Option<f64>> {
        if self.estimate_gamma {
            return Ok(None);
        }
        self.base.nominal_scale(p, n)
    }

    fn resolved(&self, x: &ObservationMatrix) -> Result<Procedure> {
        match (&self.base, self.estimate_gamma) {
            (
                Procedure::Equicorr {
                    s,
                    c_prime,
                    warn_constant,
                    ..
                },
                true,
            ) => Ok(Procedure::Equicorr {
                gamma: gamma_estimate(x)?,
                s: *s,
                c_prime: *c_prime,
                warn_constant: *warn_constant,
            }),
            (_, true) => Err(Error::config("gamma estimation applies only to the equicorr test")),
            (base, false) => Ok(base.clone()),
        }
    }

    pub fn evaluate(&self, x: &ObservationMatrix) -> Result<Evaluation> {
        self.resolved(x)?.evaluate(x)
    }

    pub fn run(&self, x: &ObservationMatrix, threshold: Threshold) -> Result<TestOutcome> {
        let proc = self.resolved(x)?;
        let eval = proc.evaluate(x)?;
        proc.decide(eval, threshold)
    }
}
