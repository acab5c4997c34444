// SPDX-License-Identifier: MIT OR Apache-2.0

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};
use libm::erfc;

use super::NeumaierSum;
use crate::error::{Error, Result};

/// Above this point `ν_a` is evaluated through the Mills ratio continued fraction.
const MILLS_SWITCH: f64 = 3.0;
const MILLS_DEPTH: u32 = 80;

/// `ln(ln(8n))`, positive for every `n >= 1`.
pub fn loglog8n(n: usize) -> f64 {
    (8.0 * n as f64).ln().ln()
}

/// Mills ratio `Φ̄(a)/φ(a)` for `a >= 3` via Laplace's continued fraction
/// `1/(a + 1/(a + 2/(a + 3/(a + …))))`, evaluated bottom-up.
fn mills_ratio_tail(a: f64) -> f64 {
    let mut tail = 0.0;
    for k in (1..=MILLS_DEPTH).rev() {
        tail = f64::from(k) / (a + tail);
    }
    1.0 / (a + tail)
}

/// `ν_a = E(Z² | |Z| ≥ a) = 1 + a·φ(a)/Φ̄(a)` for `Z ~ N(0, 1)`.
pub fn nu_a(a: f64) -> Result<f64> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::domain(format!(
            "nu_a needs a finite a >= 0; got {a}"
        )));
    }
    if a == 0.0 {
        return Ok(1.0);
    }
    if a <= MILLS_SWITCH {
        let density = (-0.5 * a * a).exp() / (2.0 * PI).sqrt();
        let upper_tail = 0.5 * erfc(a * FRAC_1_SQRT_2);
        Ok(1.0 + a * density / upper_tail)
    } else {
        Ok(1.0 + a / mills_ratio_tail(a))
    }
}

/// A truncation threshold `a` together with its centring constant `ν_a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationLevel {
    pub a: f64,
    pub nu_a: f64,
}

impl TruncationLevel {
    pub fn new(a: f64) -> Result<Self> {
        Ok(Self { a, nu_a: nu_a(a)? })
    }

    /// Level from a squared threshold; negative `a²` is clamped to zero.
    pub fn from_squared(a2: f64) -> Result<Self> {
        Self::new(a2.max(0.0).sqrt())
    }

    pub fn zero() -> Self {
        Self { a: 0.0, nu_a: 1.0 }
    }
}

/// `f_a(x) = (x² − ν_a)·1{|x| ≥ a}`.
#[inline]
pub fn f_a(x: f64, level: &TruncationLevel) -> f64 {
    if x.abs() >= level.a {
        x * x - level.nu_a
    } else {
        0.0
    }
}

/// Half-width `C'·√(ln ln(8n) / p)` of the window used by [`g_a`].
pub fn g_a_window(c_prime: f64, p: usize, n: usize) -> f64 {
    c_prime * (loglog8n(n) / p as f64).sqrt()
}

/// `inf { f_a(y) : |y − x| ≤ w }` in closed form.
///
/// `f_a` is even and increasing in `|y|` on `{|y| ≥ a}`, so only the smallest
/// attainable `|y|` in the window and whether the window reaches below `a`
/// matter.
pub fn g_a_with_window(x: f64, level: &TruncationLevel, w: f64) -> f64 {
    let u = x.abs();
    let nearest = (u - w).max(0.0);
    let farthest = u + w;
    if nearest >= level.a {
        nearest * nearest - level.nu_a
    } else if farthest >= level.a {
        // window meets both sides of the threshold; ν_a > a² makes this negative
        (level.a * level.a - level.nu_a).min(0.0)
    } else {
        0.0
    }
}

/// `g_a(x) = inf { f_a(y) : |y − x| ≤ C'·√(ln ln(8n)/p) }`.
pub fn g_a(x: f64, level: &TruncationLevel, c_prime: f64, p: usize, n: usize) -> f64 {
    g_a_with_window(x, level, g_a_window(c_prime, p, n))
}

/// The three-piece lower envelope used to analyse the equicorrelated test:
/// `0` on `|x| ≤ 9a/10`, `a² − ν_a` on `(9a/10, 11a/10]`, and
/// `(|x| − a/10)² − ν_a` beyond.
pub fn h_a(x: f64, level: &TruncationLevel) -> Result<f64> {
    let a = level.a;
    if a <= 0.0 {
        return Err(Error::domain("h_a needs a > 0"));
    }
    let u = x.abs();
    Ok(if u <= 0.9 * a {
        0.0
    } else if u <= 1.1 * a {
        a * a - level.nu_a
    } else {
        let d = u - a / 10.0;
        d * d - level.nu_a
    })
}

/// `Σ_j (y_j² − ν_a)·1{|y_j| ≥ a}` with compensated summation.
///
/// At `a = 0` this is evaluated as `‖y‖² − p`, the same expression the
/// unthresholded statistics use, so the two agree bit for bit.
pub fn threshold_stat(y: &[f64], level: &TruncationLevel) -> f64 {
    if level.a == 0.0 {
        return centered_sum_of_squares(y, level.nu_a * y.len() as f64);
    }
    y.iter().map(|&v| f_a(v, level)).collect::<NeumaierSum>().total()
}

/// `‖y‖² − center` with compensated summation.
pub fn centered_sum_of_squares(y: &[f64], center: f64) -> f64 {
    y.iter().map(|v| v * v).collect::<NeumaierSum>().total() - center
}

/// Sample median; the mean of the two central order statistics for even length.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let mut buf = values.to_vec();
    let m = buf.len() / 2;
    let (lower, upper, _) = buf.select_nth_unstable_by(m, f64::total_cmp);
    if values.len() % 2 == 1 {
        *upper
    } else {
        let below = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (below + *upper)
    }
}

/// `(y − Median(y)·1) / √(1 − γ)`.
pub fn median_correct(y: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::domain(format!(
            "median correction needs gamma in [0, 1); got {gamma}"
        )));
    }
    if y.is_empty() {
        return Err(Error::domain("median correction needs p >= 1"));
    }
    let m = median(y);
    let scale = 1.0 / (1.0 - gamma).sqrt();
    Ok(y.iter().map(|v| (v - m) * scale).collect())
}
