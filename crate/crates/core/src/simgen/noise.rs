// SPDX-License-Identifier: MIT OR Apache-2.0

use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::SpatialFunctionals;

/// Noise model for the columns of `E` in `X = θ + E`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceSpec {
    /// Independent standard normal entries.
    #[default]
    Identity,
    /// Independent columns with covariance `(1 − γ)I + γ11ᵀ`.
    Equicorrelated { gamma: f64 },
    /// Independent columns with the given positive definite covariance.
    Explicit { matrix: Vec<Vec<f64>> },
    /// Identity per-time covariance, with each run of `⌊B⌋ + 1` consecutive
    /// columns sharing one noise draw; a member of the class with
    /// off-diagonal budget `B`.
    TemporalBlock { b: f64 },
}

impl CovarianceSpec {
    pub fn validate(&self, p: usize) -> Result<()> {
        match self {
            Self::Identity => Ok(()),
            Self::Equicorrelated { gamma } => {
                if (0.0..1.0).contains(gamma) {
                    Ok(())
                } else {
                    Err(Error::domain(format!("gamma must lie in [0, 1); got {gamma}")))
                }
            }
            Self::Explicit { matrix } => {
                if matrix.len() != p || matrix.iter().any(|r| r.len() != p) {
                    return Err(Error::domain(format!("explicit covariance must be {p}x{p}")));
                }
                self.cholesky(p).map(|_| ())
            }
            Self::TemporalBlock { b } => {
                if *b >= 0.0 && b.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain(format!("temporal budget B must be finite and >= 0; got {b}")))
                }
            }
        }
    }

    /// Run length of shared draws for the temporal-block model, 1 otherwise.
    pub fn block_len(&self) -> usize {
        match self {
            Self::TemporalBlock { b } => b.floor() as usize + 1,
            _ => 1,
        }
    }

    /// Covariance of a single column.
    pub fn per_time_matrix(&self, p: usize) -> Result<DMatrix<f64>> {
        self.validate_shape_only(p)?;
        Ok(match self {
            Self::Identity | Self::TemporalBlock { .. } => DMatrix::identity(p, p),
            Self::Equicorrelated { gamma } => {
                DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { *gamma })
            }
            Self::Explicit { matrix } => DMatrix::from_fn(p, p, |i, j| matrix[i][j]),
        })
    }

    fn validate_shape_only(&self, p: usize) -> Result<()> {
        match self {
            Self::Explicit { matrix } if matrix.len() != p || matrix.iter().any(|r| r.len() != p) => {
                Err(Error::domain(format!("explicit covariance must be {p}x{p}")))
            }
            _ => Ok(()),
        }
    }

    fn cholesky(&self, p: usize) -> Result<Cholesky<f64, Dyn>> {
        let m = self.per_time_matrix(p)?;
        if (0..p).any(|i| (0..i).any(|j| m[(i, j)] != m[(j, i)])) {
            return Err(Error::domain("explicit covariance is not symmetric"));
        }
        Cholesky::new(m).ok_or_else(|| Error::domain("covariance is not positive definite"))
    }

    /// Trace, Frobenius and operator norm of the per-time covariance.
    pub fn functionals(&self, p: usize) -> Result<SpatialFunctionals> {
        self.validate(p)?;
        Ok(match self {
            Self::Identity | Self::TemporalBlock { .. } => SpatialFunctionals::identity(p),
            Self::Equicorrelated { gamma } => SpatialFunctionals::equicorrelated(p, *gamma),
            Self::Explicit { .. } => SpatialFunctionals::of_matrix(&self.per_time_matrix(p)?),
        })
    }

    /// Inverse of the per-time covariance; `None` stands for the identity.
    pub fn per_time_precision(&self, p: usize) -> Result<Option<DMatrix<f64>>> {
        self.validate(p)?;
        match self {
            Self::Identity | Self::TemporalBlock { .. } => Ok(None),
            _ => Ok(Some(self.cholesky(p)?.inverse())),
        }
    }

    /// Short label used in reports, e.g. `equicorrelated(0.5)`.
    pub fn label(&self) -> String {
        match self {
            Self::Identity => "identity".into(),
            Self::Equicorrelated { gamma } => format!("equicorrelated({gamma})"),
            Self::Explicit { matrix } => format!("explicit({}x{})", matrix.len(), matrix.len()),
            Self::TemporalBlock { b } => format!("temporal_block({b})"),
        }
    }
}

/// Parses `identity`, `equicorr:<γ>` and `temporal:<B>`. Explicit matrices
/// come from files and are handled by the caller.
impl FromStr for CovarianceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let number = |what: &str| -> Result<f64> {
            arg.ok_or_else(|| Error::config(format!("noise spec `{s}` needs a {what} value")))?
                .parse::<f64>()
                .map_err(|e| Error::config(format!("noise spec `{s}`: {e}")))
        };
        match head {
            "identity" | "iid" => Ok(Self::Identity),
            "equicorr" | "equicorrelated" => Ok(Self::Equicorrelated { gamma: number("gamma")? }),
            "temporal" | "temporal_block" => Ok(Self::TemporalBlock { b: number("B")? }),
            _ => Err(Error::config(format!(
                "unknown noise spec `{s}`; expected identity, equicorr:<gamma> or temporal:<B>"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
enum Kernel {
    Identity,
    Equicorrelated { common: f64, idio: f64 },
    Explicit { lower: DMatrix<f64> },
    TemporalBlock { run: usize },
}

/// A noise model bound to a dimension, with any factorisation computed once.
#[derive(Clone, Debug)]
pub struct NoiseSampler {
    p: usize,
    kernel: Kernel,
}

impl NoiseSampler {
    pub fn new(spec: &CovarianceSpec, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::domain("noise sampler needs p >= 1"));
        }
        spec.validate(p)?;
        let kernel = match spec {
            CovarianceSpec::Identity => Kernel::Identity,
            CovarianceSpec::Equicorrelated { gamma } => Kernel::Equicorrelated {
                common: gamma.sqrt(),
                idio: (1.0 - gamma).sqrt(),
            },
            CovarianceSpec::Explicit { .. } => Kernel::Explicit {
                lower: spec.cholesky(p)?.l(),
            },
            CovarianceSpec::TemporalBlock { .. } => Kernel::TemporalBlock {
                run: spec.block_len(),
            },
        };
        Ok(Self { p, kernel })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Fills `out` (column-major, `p × n`) with one noise realisation.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let p = self.p;
        debug_assert_eq!(out.len() % p, 0);
        match &self.kernel {
            Kernel::Identity => {
                for v in out.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
            }
            Kernel::Equicorrelated { common, idio } => {
                // factor form: √γ·W_t + √(1−γ)·Z_tj
                for col in out.chunks_exact_mut(p) {
                    let w: f64 = rng.sample(StandardNormal);
                    let shift = common * w;
                    for v in col.iter_mut() {
                        let z: f64 = rng.sample(StandardNormal);
                        *v = shift + idio * z;
                    }
                }
            }
            Kernel::Explicit { lower } => {
                let mut z = vec![0.0; p];
                for col in out.chunks_exact_mut(p) {
                    for v in z.iter_mut() {
                        *v = rng.sample(StandardNormal);
                    }
                    for (i, v) in col.iter_mut().enumerate() {
                        *v = (0..=i).map(|k| lower[(i, k)] * z[k]).sum();
                    }
                }
            }
            Kernel::TemporalBlock { run } => {
                for block in out.chunks_mut(run * p) {
                    let (first, rest) = block.split_at_mut(p);
                    for v in first.iter_mut() {
                        *v = rng.sample(StandardNormal);
                    }
                    for col in rest.chunks_exact_mut(p) {
                        col.copy_from_slice(first);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::seed::stream;

    #[test]
    fn parses_spec_strings() {
        assert_eq!("identity".parse::<CovarianceSpec>().unwrap(), CovarianceSpec::Identity);
        assert_eq!(
            "equicorr:0.5".parse::<CovarianceSpec>().unwrap(),
            CovarianceSpec::Equicorrelated { gamma: 0.5 }
        );
        assert_eq!(
            "temporal:2".parse::<CovarianceSpec>().unwrap(),
            CovarianceSpec::TemporalBlock { b: 2.0 }
        );
        assert!("equicorr".parse::<CovarianceSpec>().is_err());
        assert!("banded:3".parse::<CovarianceSpec>().is_err());
    }

    #[test]
    fn validation() {
        assert!(CovarianceSpec::Equicorrelated { gamma: 1.0 }.validate(3).is_err());
        assert!(CovarianceSpec::TemporalBlock { b: -1.0 }.validate(3).is_err());
        let not_pd = CovarianceSpec::Explicit { matrix: vec![vec![1.0, 2.0], vec![2.0, 1.0]] };
        assert!(not_pd.validate(2).is_err());
        assert!(NoiseSampler::new(&not_pd, 2).is_err());
        let asym = CovarianceSpec::Explicit { matrix: vec![vec![2.0, 0.5], vec![0.0, 2.0]] };
        assert!(asym.validate(2).is_err());
        let ok = CovarianceSpec::Explicit { matrix: vec![vec![2.0, 0.5], vec![0.5, 1.0]] };
        assert!(ok.validate(2).is_ok());
        assert!(ok.validate(3).is_err());
    }

    #[test]
    fn block_lengths() {
        assert_eq!(CovarianceSpec::TemporalBlock { b: 0.0 }.block_len(), 1);
        assert_eq!(CovarianceSpec::TemporalBlock { b: 2.0 }.block_len(), 3);
        assert_eq!(CovarianceSpec::TemporalBlock { b: 2.5 }.block_len(), 3);
        assert_eq!(CovarianceSpec::Identity.block_len(), 1);
    }

    #[test]
    fn temporal_blocks_repeat_draws() {
        let sampler = NoiseSampler::new(&CovarianceSpec::TemporalBlock { b: 2.0 }, 2).unwrap();
        let mut out = vec![0.0; 2 * 7];
        sampler.fill(&mut stream(1, &[]), &mut out);
        let cols: Vec<&[f64]> = out.chunks_exact(2).collect();
        assert_eq!(cols[0], cols[1]);
        assert_eq!(cols[1], cols[2]);
        assert_ne!(cols[2], cols[3]);
        assert_eq!(cols[3], cols[5]);
        assert_ne!(cols[5], cols[6]);
    }

    #[test]
    fn precision_inverts_covariance() {
        let spec = CovarianceSpec::Equicorrelated { gamma: 0.4 };
        let prec = spec.per_time_precision(4).unwrap().unwrap();
        let prod = spec.per_time_matrix(4).unwrap() * prec;
        assert!((prod - DMatrix::<f64>::identity(4, 4)).norm() < 1e-12);
        assert!(CovarianceSpec::Identity.per_time_precision(4).unwrap().is_none());
    }
}
