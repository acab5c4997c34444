// SPDX-License-Identifier: MIT OR Apache-2.0

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::alternative::AlternativeSpec;
use super::noise::CovarianceSpec;
use super::prior::PriorSpec;
use super::seed::stream;
use crate::error::{Error, Result};
use crate::kernels::NeumaierSum;
use crate::parallel::par_map_indexed;

/// Largest exponent accepted before the estimate is reported as infinite.
pub const LOG_OVERFLOW: f64 = 700.0;

/// Monte Carlo estimate of `E exp⟨θ₁, θ₂⟩_{Σ⁻¹} − 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub replications: usize,
    /// Largest `⟨θ₁, θ₂⟩` seen.
    pub max_log_term: f64,
    /// Set when some term exceeded `exp(700)`; the estimate is then `+∞`.
    pub overflow: bool,
}

struct Pairing {
    precision: Option<DMatrix<f64>>,
}

impl Pairing {
    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        match &self.precision {
            None => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Some(m) => {
                let b = DVector::from_column_slice(b);
                let mb = m * b;
                a.iter().zip(mb.iter()).map(|(x, y)| x * y).sum()
            }
        }
    }

    /// Frobenius pairing of two piecewise-constant mean matrices.
    fn inner(&self, x: &AlternativeSpec, y: &AlternativeSpec) -> f64 {
        let n = x.n;
        let lo = x.t0.min(y.t0);
        let hi = x.t0.max(y.t0);
        let mut total = lo as f64 * self.dot(&x.mu1, &y.mu1);
        if x.t0 > y.t0 {
            total += (x.t0 - y.t0) as f64 * self.dot(&x.mu1, &y.mu2);
        } else if y.t0 > x.t0 {
            total += (y.t0 - x.t0) as f64 * self.dot(&x.mu2, &y.mu1);
        }
        total + (n - hi) as f64 * self.dot(&x.mu2, &y.mu2)
    }
}

/// Averages `exp⟨θ₁, θ₂⟩_{Σ⁻¹}` over `r` independent prior pairs.
///
/// Pair `i` is drawn from the streams `(seed, [i, 0])` and `(seed, [i, 1])`.
/// The standard error is the jackknife one, which for a mean is `sd/√r`.
pub fn chisq_divergence_mc(
    prior: &PriorSpec,
    p: usize,
    n: usize,
    cov: &CovarianceSpec,
    r: usize,
    seed: u64,
) -> Result<DivergenceEstimate> {
    if r < 2 {
        return Err(Error::domain(format!("need at least 2 replications; got {r}")));
    }
    let pairing = Pairing {
        precision: cov.per_time_precision(p)?,
    };
    // Fail fast on an invalid prior before spawning work.
    prior.draw(p, n, &mut stream(seed, &[u64::MAX]))?;
    let terms: Vec<f64> = par_map_indexed(r, |i| {
        let a = prior.draw(p, n, &mut stream(seed, &[i as u64, 0]));
        let b = prior.draw(p, n, &mut stream(seed, &[i as u64, 1]));
        match (a, b) {
            (Ok(a), Ok(b)) => pairing.inner(&a.alt, &b.alt),
            _ => f64::NAN,
        }
    });
    if terms.iter().any(|t| !t.is_finite()) {
        return Err(Error::domain("non-finite inner product in divergence estimate"));
    }
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max > LOG_OVERFLOW {
        log::warn!("divergence estimate overflowed: largest exponent {max:.1}");
        return Ok(DivergenceEstimate {
            estimate: f64::INFINITY,
            std_error: f64::INFINITY,
            replications: r,
            max_log_term: max,
            overflow: true,
        });
    }
    let scaled: Vec<f64> = terms.iter().map(|t| (t - max).exp()).collect();
    let rf = r as f64;
    let mean: f64 = scaled.iter().copied().collect::<NeumaierSum>().total() / rf;
    let ss: f64 = scaled
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .collect::<NeumaierSum>()
        .total();
    let scale = max.exp();
    let sd = (ss / (rf - 1.0)).sqrt();
    Ok(DivergenceEstimate {
        estimate: scale * mean - 1.0,
        std_error: scale * sd / rf.sqrt(),
        replications: r,
        max_log_term: max,
        overflow: false,
    })
}
