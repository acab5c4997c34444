// SPDX-License-Identifier: MIT OR Apache-2.0

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::alternative::AlternativeSpec;
use super::seed::rng_from_seed;
use crate::error::{Error, Result};
use crate::kernels::loglog8n;
use crate::rates::loglog_n;

/// Random mean-change distributions from the lower-bound constructions.
///
/// Draws put a change of height `β·u_j/√(2^k)` on a random support `S` of
/// size `s` for the first `2^k` columns and zero elsewhere. The dense kinds
/// use random signs `u_j`, the sparse kinds `u_j = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    Dense { s: usize, beta: f64 },
    SparsePositive { s: usize, beta: f64 },
    /// `k` on the coarsened grid with spacing `⌊c·lnlnln n⌋`.
    AsymDense { s: usize, beta: f64, c: f64 },
    AsymSparse { s: usize, beta: f64, c: f64 },
    PointMass { alt: AlternativeSpec },
}

/// Default spacing constant for the coarsened grid.
pub const DEFAULT_GRID_CONSTANT: f64 = 1.0;

/// One draw: the alternative plus the latent variables that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorDraw {
    pub alt: AlternativeSpec,
    /// `None` for a point mass.
    pub k: Option<u32>,
    /// Sorted zero-based row indices carrying the change.
    pub support: Vec<usize>,
}

fn check_s(s: usize, p: usize) -> Result<()> {
    if s == 0 || s > p {
        return Err(Error::domain(format!("prior sparsity must lie in 1..=p; got s={s}, p={p}")));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::domain(format!("prior height must be positive and finite; got {beta}")));
    }
    Ok(())
}

impl PriorSpec {
    /// Dense prior with `β = (c₁ p L / s²)^{1/4}`, `L = lnln(8n)`.
    pub fn dense_scaled(p: usize, n: usize, s: usize, c1: f64) -> Result<Self> {
        check_s(s, p)?;
        let l = loglog8n(n);
        let beta = (c1 * p as f64 * l / (s * s) as f64).powf(0.25);
        check_beta(beta)?;
        Ok(Self::Dense { s, beta })
    }

    /// Sparse prior with `β = √ln(c₂ p L / s²)`; needs `c₂pL > s²`.
    pub fn sparse_scaled(p: usize, n: usize, s: usize, c2: f64) -> Result<Self> {
        check_s(s, p)?;
        let arg = c2 * p as f64 * loglog8n(n) / (s * s) as f64;
        if !(arg > 1.0) {
            return Err(Error::domain(format!(
                "sparse prior needs c2·p·lnln(8n)/s² > 1; got {arg}"
            )));
        }
        Ok(Self::SparsePositive { s, beta: arg.ln().sqrt() })
    }

    /// `β² = (2 − ε)√(p lnln n / s²)` on the coarsened grid.
    pub fn asym_dense(p: usize, n: usize, s: usize, eps: f64, c: f64) -> Result<Self> {
        check_s(s, p)?;
        let b2 = (2.0 - eps) * (p as f64 * loglog_n(n)? / (s * s) as f64).sqrt();
        check_beta(b2)?;
        Ok(Self::AsymDense { s, beta: b2.sqrt(), c })
    }

    /// `β² = (1 − ε) ln(p lnln n / s²)` on the coarsened grid.
    pub fn asym_sparse(p: usize, n: usize, s: usize, eps: f64, c: f64) -> Result<Self> {
        check_s(s, p)?;
        let b2 = (1.0 - eps) * (p as f64 * loglog_n(n)? / (s * s) as f64).ln();
        check_beta(b2)?;
        Ok(Self::AsymSparse { s, beta: b2.sqrt(), c })
    }

    pub fn sparsity(&self) -> usize {
        match self {
            Self::Dense { s, .. }
            | Self::SparsePositive { s, .. }
            | Self::AsymDense { s, .. }
            | Self::AsymSparse { s, .. } => *s,
            Self::PointMass { alt } => alt.sparsity(),
        }
    }

    fn signed(&self) -> bool {
        matches!(self, Self::Dense { .. } | Self::AsymDense { .. })
    }

    /// Admissible exponents `k` (durations `2^k`).
    pub fn grid(&self, n: usize) -> Result<Vec<u32>> {
        match self {
            Self::Dense { .. } | Self::SparsePositive { .. } => dyadic_exponents(n),
            Self::AsymDense { c, .. } | Self::AsymSparse { c, .. } => coarse_exponents(n, *c),
            Self::PointMass { .. } => Err(Error::domain("a point mass has no duration grid")),
        }
    }

    /// Signal strength every draw is guaranteed to reach.
    pub fn rho2(&self, n: usize) -> f64 {
        match self {
            Self::Dense { s, beta } | Self::SparsePositive { s, beta } => {
                *s as f64 * beta * beta / 2.0
            }
            Self::AsymDense { s, beta, .. } | Self::AsymSparse { s, beta, .. } => {
                let nf = n as f64;
                *s as f64 * beta * beta * (nf - nf.sqrt()) / nf
            }
            Self::PointMass { alt } => alt.rho2(),
        }
    }

    fn validate(&self, p: usize, n: usize) -> Result<()> {
        match self {
            Self::PointMass { alt } => {
                alt.validate()?;
                if alt.p() != p || alt.n != n {
                    return Err(Error::domain("point-mass alternative does not match (p, n)"));
                }
                Ok(())
            }
            Self::Dense { s, beta }
            | Self::SparsePositive { s, beta }
            | Self::AsymDense { s, beta, .. }
            | Self::AsymSparse { s, beta, .. } => {
                check_s(*s, p)?;
                check_beta(*beta)
            }
        }
    }

    /// Draws one alternative using `rng`.
    pub fn draw<R: Rng + ?Sized>(&self, p: usize, n: usize, rng: &mut R) -> Result<PriorDraw> {
        self.validate(p, n)?;
        let grid = match self {
            Self::PointMass { alt } => {
                let support = (0..p).filter(|&j| alt.mu1[j] != alt.mu2[j]).collect();
                return Ok(PriorDraw { alt: alt.clone(), k: None, support });
            }
            _ => self.grid(n)?,
        };
        let (s, beta) = match self {
            Self::Dense { s, beta }
            | Self::SparsePositive { s, beta }
            | Self::AsymDense { s, beta, .. }
            | Self::AsymSparse { s, beta, .. } => (*s, *beta),
            Self::PointMass { .. } => unreachable!(),
        };
        let k = grid[rng.random_range(0..grid.len())];
        let mut support = if s == p {
            (0..p).collect()
        } else {
            index::sample(rng, p, s).into_vec()
        };
        support.sort_unstable();
        let t0 = 1usize << k;
        let height = beta / (t0 as f64).sqrt();
        let mut mu1 = vec![0.0; p];
        for &j in &support {
            let sign = if self.signed() && rng.random::<bool>() { -1.0 } else { 1.0 };
            mu1[j] = sign * height;
        }
        let alt = AlternativeSpec::new(n, t0, mu1, vec![0.0; p])?;
        Ok(PriorDraw { alt, k: Some(k), support })
    }
}

/// `{0, 1, …, ⌊log₂(n/2)⌋}`.
pub fn dyadic_exponents(n: usize) -> Result<Vec<u32>> {
    if n < 2 {
        return Err(Error::domain(format!("need n >= 2; got {n}")));
    }
    Ok((0..=(n / 2).ilog2()).collect())
}

/// `{0, m, 2m, …, m·⌊log₂(√n)/m⌋}` with `m = ⌊c·lnlnln n⌋`.
pub fn coarse_exponents(n: usize, c: f64) -> Result<Vec<u32>> {
    let lll = loglog_n(n)?.ln();
    let m = (c * lll).floor();
    if !(m >= 1.0 && m.is_finite()) {
        return Err(Error::domain(format!(
            "coarsened grid is empty: floor(c·lnlnln n) = {m} for n={n}, c={c}"
        )));
    }
    let m = m as u32;
    let top = ((n as f64).sqrt().log2() / m as f64).floor() as u32;
    Ok((0..=top).map(|j| j * m).collect())
}

/// Draws one alternative from `prior`, deterministic in `seed`.
pub fn sample_prior(prior: &PriorSpec, p: usize, n: usize, seed: u64) -> Result<PriorDraw> {
    prior.draw(p, n, &mut rng_from_seed(seed))
}
