// SPDX-License-Identifier: MIT OR Apache-2.0

//! Closed-form rate functions, threshold recipes, the sparsity grid used for
//! adaptation, and chi-squared style tail thresholds.
//!
//! All logarithms are natural; `L = ln ln(8n)` throughout. Tail functions
//! return the level exceeded with probability at most `e^{−x}` rather than a
//! probability.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{loglog8n, TruncationLevel};

/// Dimension, length and sparsity of a testing problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSize {
    pub p: usize,
    pub n: usize,
    pub s: usize,
}

impl ProblemSize {
    pub fn new(p: usize, n: usize, s: usize) -> Result<Self> {
        if p == 0 || n < 2 || s == 0 || s > p {
            return Err(Error::domain(format!(
                "problem size needs p >= 1, n >= 2, 1 <= s <= p; got p={p}, n={n}, s={s}"
            )));
        }
        Ok(Self { p, n, s })
    }

    /// `L = ln ln(8n)`.
    pub fn loglog(&self) -> f64 {
        loglog8n(self.n)
    }

    /// `√(p·L)`, the sparsity at which the regimes meet.
    pub fn boundary(&self) -> f64 {
        (self.p as f64 * self.loglog()).sqrt()
    }

    pub fn regime(&self) -> Regime {
        // a tie is classified dense
        if self.s as f64 >= self.boundary() {
            Regime::Dense
        } else {
            Regime::Sparse
        }
    }

    /// `ln(e·p·L / s²)`.
    fn sparse_log(&self) -> f64 {
        let s = self.s as f64;
        1.0 + (self.p as f64 * self.loglog() / (s * s)).ln()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Dense,
    Sparse,
}

/// The minimax rate function `r*(p, n, s)`:
/// `√(pL)` when `s ≥ √(pL)`, else `max(s·ln(e·p·L/s²), L)`.
pub fn rate_rstar(sz: &ProblemSize) -> f64 {
    match sz.regime() {
        Regime::Dense => sz.boundary(),
        Regime::Sparse => (sz.s as f64 * sz.sparse_log()).max(sz.loglog()),
    }
}

/// Truncation level for the fixed-sparsity test: `a² = 4·ln(e·p·L/s²)` in the
/// sparse regime and `a = 0` in the dense regime.
pub fn threshold_a(sz: &ProblemSize) -> TruncationLevel {
    match sz.regime() {
        Regime::Dense => TruncationLevel::zero(),
        Regime::Sparse => TruncationLevel::from_squared(4.0 * sz.sparse_log())
            .expect("sparse-regime threshold is finite and positive"),
    }
}

/// `{1, 2, 4, …, 2^(⌈log₂√(pL)⌉ − 1)} ∪ {p}`, ascending and unique.
pub fn sparsity_grid(p: usize, n: usize) -> Result<Vec<usize>> {
    if p == 0 || n < 2 {
        return Err(Error::domain("sparsity grid needs p >= 1 and n >= 2"));
    }
    let top = ((p as f64 * loglog8n(n)).sqrt()).log2().ceil();
    let mut grid = Vec::new();
    if top >= 1.0 {
        let mut s = 1usize;
        for _ in 0..(top as u32) {
            if s > p {
                break;
            }
            grid.push(s);
            s *= 2;
        }
    }
    grid.push(p);
    grid.sort_unstable();
    grid.dedup();
    Ok(grid)
}

/// `ln ln n`, the iterated logarithm used by the asymptotic procedures.
pub fn loglog_n(n: usize) -> Result<f64> {
    let v = (n as f64).ln().ln();
    if !(v > 0.0) {
        return Err(Error::domain(format!(
            "ln ln n must be positive; got n = {n}"
        )));
    }
    Ok(v)
}

/// Detection boundary of the asymptotic procedures at multiplier `ξ`:
/// dense `ξ·(p·ln ln n)^{1/4}`, sparse `ξ·√(s·ln(p·ln ln n / s²))`.
pub fn asymptotic_boundary(regime: Regime, sz: &ProblemSize, xi: f64) -> Result<f64> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::domain(format!("xi must be positive; got {xi}")));
    }
    let ll = loglog_n(sz.n)?;
    let p = sz.p as f64;
    match regime {
        Regime::Dense => Ok(xi * (p * ll).powf(0.25)),
        Regime::Sparse => {
            let s = sz.s as f64;
            let arg = p * ll / (s * s);
            if arg <= 1.0 {
                return Err(Error::domain(format!(
                    "sparse boundary needs p·lnln(n)/s² > 1; got {arg}"
                )));
            }
            Ok(xi * (s * arg.ln()).sqrt())
        }
    }
}

/// `B·p + (1 + B)·max(√(pL), L)` for temporally dependent noise of budget `B`.
pub fn temporal_rate(p: usize, n: usize, b: f64) -> Result<f64> {
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::domain(format!("B must be finite and >= 0; got {b}")));
    }
    let l = loglog8n(n);
    let p = p as f64;
    Ok(b * p + (1.0 + b) * (p * l).sqrt().max(l))
}

fn check_tail_x(x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::domain(format!("tail level x must be positive; got {x}")));
    }
    Ok(())
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::domain("tail bound needs at least one weight"));
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::domain("tail bound weights must be finite and >= 0"));
    }
    if weights.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::domain("tail bound weights must be sorted descending"));
    }
    Ok(())
}

/// Upper level `Σλ_j + 2√(x·Σλ_j²) + 2λ₁x` for the weighted chi-squared sum
/// `Σ λ_j Z_j²`.
pub fn tail_chisq_upper(weights: &[f64], x: f64) -> Result<f64> {
    check_weights(weights)?;
    check_tail_x(x)?;
    let sum: f64 = weights.iter().sum();
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    Ok(sum + 2.0 * (x * sum_sq).sqrt() + 2.0 * weights[0] * x)
}

/// Lower level `Σλ_j − 2√(x·Σλ_j²)`.
pub fn tail_chisq_lower(weights: &[f64], x: f64) -> Result<f64> {
    check_weights(weights)?;
    check_tail_x(x)?;
    let sum: f64 = weights.iter().sum();
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    Ok(sum - 2.0 * (x * sum_sq).sqrt())
}

/// Upper and lower levels for a non-central `χ²_{p,λ}` variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailLevels {
    pub upper: f64,
    pub lower: f64,
}

pub fn tail_noncentral(p: usize, lambda: f64, x: f64) -> Result<TailLevels> {
    if p == 0 {
        return Err(Error::domain("non-central tail needs p >= 1"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::domain("non-centrality must be finite and >= 0"));
    }
    check_tail_x(x)?;
    let p = p as f64;
    let spread = 2.0 * (x * (p + 2.0 * lambda)).sqrt();
    Ok(TailLevels {
        upper: p + lambda + spread + 2.0 * x,
        lower: p + lambda - spread,
    })
}

/// Constant of the truncated chi-squared tail bound.
pub const TRUNCATED_TAIL_CONSTANT: f64 = 9.0;

/// `9·(√(p·e^{−a²/2}·x) + x)`: null level of `Σ_j (Z_j² − ν_a)·1{|Z_j| ≥ a}`.
pub fn tail_truncated(p: usize, a: f64, x: f64) -> Result<f64> {
    if p == 0 {
        return Err(Error::domain("truncated tail needs p >= 1"));
    }
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::domain("truncation level must be finite and >= 0"));
    }
    check_tail_x(x)?;
    let mass = p as f64 * (-0.5 * a * a).exp();
    Ok(TRUNCATED_TAIL_CONSTANT * ((mass * x).sqrt() + x))
}
