// SPDX-License-Identifier: MIT OR Apache-2.0

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::noise::{CovarianceSpec, NoiseSampler};
use super::seed::rng_from_seed;
use crate::error::{Error, Result};
use crate::kernels::ObservationMatrix;

/// A single mean change: columns `1..=t0` have mean `mu1`, the rest `mu2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlternativeSpec {
    pub n: usize,
    pub t0: usize,
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
}

impl AlternativeSpec {
    pub fn new(n: usize, t0: usize, mu1: Vec<f64>, mu2: Vec<f64>) -> Result<Self> {
        let spec = Self { n, t0, mu1, mu2 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.t0 == 0 || self.t0 >= self.n {
            return Err(Error::domain(format!(
                "changepoint must satisfy 1 <= t0 <= n-1; got t0={}, n={}",
                self.t0, self.n
            )));
        }
        if self.mu1.is_empty() || self.mu1.len() != self.mu2.len() {
            return Err(Error::domain("mean vectors must be non-empty and of equal length"));
        }
        if self.mu1.iter().chain(&self.mu2).any(|v| !v.is_finite()) {
            return Err(Error::domain("mean vectors must be finite"));
        }
        Ok(())
    }

    /// Change of size `√(ρ²·n/(t0(n − t0))/s)` on each of the first `s`
    /// coordinates, so that the effective signal is exactly `rho2`.
    pub fn planted(p: usize, n: usize, t0: usize, s: usize, rho2: f64) -> Result<Self> {
        if s > p {
            return Err(Error::domain(format!("sparsity {s} exceeds dimension {p}")));
        }
        if !(rho2 >= 0.0 && rho2.is_finite()) {
            return Err(Error::domain(format!("rho^2 must be finite and >= 0; got {rho2}")));
        }
        if t0 == 0 || t0 >= n {
            return Err(Error::domain(format!("t0 must lie in 1..n; got {t0}")));
        }
        let mut mu2 = vec![0.0; p];
        if s > 0 && rho2 > 0.0 {
            let (tf, nf) = (t0 as f64, n as f64);
            let delta = (rho2 * nf / (tf * (nf - tf)) / s as f64).sqrt();
            mu2[..s].fill(delta);
        }
        Self::new(n, t0, vec![0.0; p], mu2)
    }

    pub fn p(&self) -> usize {
        self.mu1.len()
    }

    /// `‖μ₁ − μ₂‖₀`.
    pub fn sparsity(&self) -> usize {
        self.mu1.iter().zip(&self.mu2).filter(|(a, b)| a != b).count()
    }

    /// `t0(n − t0)/n · ‖μ₁ − μ₂‖²`.
    pub fn rho2(&self) -> f64 {
        let (tf, nf) = (self.t0 as f64, self.n as f64);
        let d2: f64 = self.mu1.iter().zip(&self.mu2).map(|(a, b)| (a - b) * (a - b)).sum();
        tf * (nf - tf) / nf * d2
    }

    /// Membership in the alternative class with sparsity `s` and signal `rho`.
    pub fn in_class(&self, s: usize, rho: f64) -> bool {
        self.sparsity() <= s && self.rho2() >= rho * rho
    }

    /// The `p × n` mean matrix `θ`.
    pub fn mean_matrix(&self) -> ObservationMatrix {
        let p = self.p();
        let mut values = Vec::with_capacity(p * self.n);
        for t in 1..=self.n {
            values.extend_from_slice(if t <= self.t0 { &self.mu1 } else { &self.mu2 });
        }
        ObservationMatrix::from_parts_unchecked(p, self.n, values)
    }

    /// Adds the mean structure to column-major noise in place.
    pub(crate) fn add_to(&self, values: &mut [f64]) {
        let p = self.p();
        for (idx, col) in values.chunks_exact_mut(p).enumerate() {
            let mu = if idx < self.t0 { &self.mu1 } else { &self.mu2 };
            for (v, m) in col.iter_mut().zip(mu) {
                *v += m;
            }
        }
    }
}

/// Null data `μ1ᵀ + E` from an explicit generator.
pub fn sample_null<R: Rng + ?Sized>(
    sampler: &NoiseSampler,
    n: usize,
    mu: &[f64],
    rng: &mut R,
) -> Result<ObservationMatrix> {
    let p = sampler.p();
    if mu.len() != p {
        return Err(Error::domain("null mean length differs from p"));
    }
    if n < 2 {
        return Err(Error::domain("need n >= 2"));
    }
    let mut values = vec![0.0; p * n];
    sampler.fill(rng, &mut values);
    if mu.iter().any(|&m| m != 0.0) {
        for col in values.chunks_exact_mut(p) {
            for (v, m) in col.iter_mut().zip(mu) {
                *v += m;
            }
        }
    }
    ObservationMatrix::from_column_major(p, n, values)
}

/// Data with the mean change of `alt` from an explicit generator.
pub fn sample_alternative<R: Rng + ?Sized>(
    sampler: &NoiseSampler,
    alt: &AlternativeSpec,
    rng: &mut R,
) -> Result<ObservationMatrix> {
    alt.validate()?;
    if alt.p() != sampler.p() {
        return Err(Error::domain("alternative dimension differs from noise dimension"));
    }
    let mut values = vec![0.0; alt.p() * alt.n];
    sampler.fill(rng, &mut values);
    alt.add_to(&mut values);
    ObservationMatrix::from_column_major(alt.p(), alt.n, values)
}

/// `X = μ1ᵀ + E`, deterministic in `seed`.
pub fn gen_null(
    p: usize,
    n: usize,
    mu: &[f64],
    cov: &CovarianceSpec,
    seed: u64,
) -> Result<ObservationMatrix> {
    let sampler = NoiseSampler::new(cov, p)?;
    sample_null(&sampler, n, mu, &mut rng_from_seed(seed))
}

/// `X = θ + E` with the mean change of `alt`, deterministic in `seed`.
pub fn gen_alternative(
    alt: &AlternativeSpec,
    cov: &CovarianceSpec,
    seed: u64,
) -> Result<ObservationMatrix> {
    alt.validate()?;
    let sampler = NoiseSampler::new(cov, alt.p())?;
    sample_alternative(&sampler, alt, &mut rng_from_seed(seed))
}
