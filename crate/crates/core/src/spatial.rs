// SPDX-License-Identifier: MIT OR Apache-2.0

//! Robust estimation of covariance functionals when the data may contain one
//! mean change, and the equicorrelation estimator built on it.
//!
//! The time axis is cut into three contiguous blocks. A single changepoint can
//! contaminate at most one block's sample covariance, so the middle order
//! statistic of each functional over the three blocks tracks the clean blocks.
//!
//! The equicorrelation estimate inverts `1ᵀΣ(γ)1 = p + (p² − p)γ` at the
//! block median of `1ᵀΣ̂1`; the trace of `Σ(γ)` is `p` for every `γ` and
//! carries no information about it.

use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::ObservationMatrix;

/// Trace, Frobenius norm and operator norm of a covariance matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialFunctionals {
    pub trace: f64,
    pub frobenius: f64,
    pub operator: f64,
}

impl SpatialFunctionals {
    /// Functionals of the identity matrix `I_p`.
    pub fn identity(p: usize) -> Self {
        Self {
            trace: p as f64,
            frobenius: (p as f64).sqrt(),
            operator: 1.0,
        }
    }

    /// Closed forms for `(1 − γ)I + γ11ᵀ`:
    /// `‖Σ‖²_F = (1 − γ²)p + p²γ²` and `‖Σ‖_op = 1 + (p − 1)γ`.
    pub fn equicorrelated(p: usize, gamma: f64) -> Self {
        let pf = p as f64;
        Self {
            trace: pf,
            frobenius: ((1.0 - gamma * gamma) * pf + pf * pf * gamma * gamma).sqrt(),
            operator: 1.0 + (pf - 1.0) * gamma,
        }
    }

    /// Functionals of a symmetric matrix; the operator norm is the largest
    /// absolute eigenvalue.
    pub fn of_matrix(m: &DMatrix<f64>) -> Self {
        let sym = (m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym.clone());
        let operator = eig.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        Self {
            trace: sym.trace(),
            frobenius: sym.norm(),
            operator,
        }
    }

    /// `operator ≤ frobenius ≤ √p·operator`, and `trace ≤ p·operator`, to a
    /// relative slack `tol`.
    pub fn is_consistent(&self, p: usize, tol: f64) -> bool {
        let slack = tol * self.frobenius.max(self.operator).max(1.0);
        let root_p = (p as f64).sqrt();
        self.operator >= -slack
            && self.operator <= self.frobenius + slack
            && self.frobenius <= root_p * self.operator + slack
            && self.trace <= p as f64 * self.operator + slack
    }
}

/// Three contiguous blocks covering `1..=n`; earlier blocks take the remainder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    /// 1-based, half-open time ranges.
    pub blocks: [Range<usize>; 3],
}

impl BlockPartition {
    pub fn new(n: usize) -> Result<Self> {
        if n < 6 {
            return Err(Error::domain(format!(
                "block partition needs n >= 6 for three blocks of size >= 2; got {n}"
            )));
        }
        let base = n / 3;
        let extra = n % 3;
        let mut start = 1;
        let blocks = [0, 1, 2].map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        });
        Ok(Self { blocks })
    }
}

/// Unbiased sample covariance of the columns `range` of `x`.
fn block_covariance(x: &ObservationMatrix, range: Range<usize>) -> DMatrix<f64> {
    let p = x.p();
    let len = range.len();
    let mut mean = vec![0.0; p];
    for t in range.clone() {
        for (m, v) in mean.iter_mut().zip(x.column(t)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= len as f64;
    }
    let centred = DMatrix::from_fn(p, len, |j, k| x.get(j, range.start + k) - mean[j]);
    let mut cov = &centred * centred.transpose();
    cov /= (len - 1) as f64;
    cov
}

/// Sample covariance matrices of the three blocks.
pub fn block_covariances(x: &ObservationMatrix) -> Result<[DMatrix<f64>; 3]> {
    let part = BlockPartition::new(x.n())?;
    Ok(part.blocks.map(|r| block_covariance(x, r)))
}

fn middle_of_three(mut v: [f64; 3]) -> f64 {
    v.sort_by(f64::total_cmp);
    v[1]
}

/// Per-block functionals together with their coordinatewise medians.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockFunctionals {
    pub blocks: [SpatialFunctionals; 3],
    pub median: SpatialFunctionals,
    /// Entry sums `1ᵀΣ̂1` of the three blocks.
    pub entry_sums: [f64; 3],
    pub median_entry_sum: f64,
}

impl BlockFunctionals {
    pub fn from_blocks(blocks: [SpatialFunctionals; 3], entry_sums: [f64; 3]) -> Self {
        let median = SpatialFunctionals {
            trace: middle_of_three(blocks.map(|b| b.trace)),
            frobenius: middle_of_three(blocks.map(|b| b.frobenius)),
            operator: middle_of_three(blocks.map(|b| b.operator)),
        };
        Self {
            blocks,
            median,
            entry_sums,
            median_entry_sum: middle_of_three(entry_sums),
        }
    }
}

pub fn block_functionals(x: &ObservationMatrix) -> Result<BlockFunctionals> {
    let covs = block_covariances(x)?;
    let sums = [0, 1, 2].map(|i| covs[i].sum());
    Ok(BlockFunctionals::from_blocks(
        covs.map(|c| SpatialFunctionals::of_matrix(&c)),
        sums,
    ))
}

/// Medians over the three blocks of trace, Frobenius norm and operator norm,
/// taken separately per functional.
pub fn robust_functionals(x: &ObservationMatrix) -> Result<SpatialFunctionals> {
    Ok(block_functionals(x)?.median)
}

/// Largest value returned by [`gamma_estimate`].
pub const GAMMA_CEILING: f64 = 1.0 - 1e-9;

/// Inverts `1ᵀΣ(γ)1 = p + (p² − p)γ` at an entry-sum estimate, clamped into
/// `[0, 1)`.
pub fn gamma_from_entry_sum(entry_sum: f64, p: usize) -> Result<f64> {
    if p < 2 {
        return Err(Error::domain("gamma estimate needs p >= 2"));
    }
    let pf = p as f64;
    let raw = (entry_sum - pf) / (pf * pf - pf);
    let clamped = raw.clamp(0.0, GAMMA_CEILING);
    if clamped != raw {
        log::debug!("gamma estimate {raw} clamped to {clamped}");
    }
    Ok(clamped)
}

/// Equicorrelation estimate `(median 1ᵀΣ̂1 − p)/(p² − p)` clamped into `[0, 1)`.
pub fn gamma_estimate(x: &ObservationMatrix) -> Result<f64> {
    if x.p() < 2 {
        return Err(Error::domain("gamma estimate needs p >= 2"));
    }
    gamma_from_entry_sum(block_functionals(x)?.median_entry_sum, x.p())
}
