// SPDX-License-Identifier: MIT OR Apache-2.0

use super::ObservationMatrix;
use crate::error::{Error, Result};

/// The CUSUM contrast `Y_t` between the first `t` and the last `t` observations.
#[derive(Clone, Debug, PartialEq)]
pub struct CusumVector {
    pub t: usize,
    pub y: Vec<f64>,
}

fn check_cusum_time(n: usize, t: usize) -> Result<()> {
    if t == 0 || t > n / 2 {
        return Err(Error::domain(format!(
            "cusum time index must satisfy 1 <= t <= floor(n/2) = {}; got {t}",
            n / 2
        )));
    }
    Ok(())
}

fn check_split_time(n: usize, t: usize) -> Result<()> {
    if t == 0 || t >= n {
        return Err(Error::domain(format!(
            "split time must satisfy 1 <= t <= n-1 = {}; got {t}",
            n - 1
        )));
    }
    Ok(())
}

/// `((X_1 + … + X_t) − (X_{n−t+1} + … + X_n)) / √(2t)`, summed directly.
///
/// Each side is accumulated left to right, so the result for `X + μ1ᵀ` is
/// bit-identical to that for `X` whenever the additions are exact.
pub fn cusum(x: &ObservationMatrix, t: usize) -> Result<CusumVector> {
    let n = x.n();
    check_cusum_time(n, t)?;
    let p = x.p();
    let mut head = vec![0.0; p];
    let mut tail = vec![0.0; p];
    for s in 1..=t {
        for (h, v) in head.iter_mut().zip(x.column(s)) {
            *h += v;
        }
        for (h, v) in tail.iter_mut().zip(x.column(n - t + s)) {
            *h += v;
        }
    }
    let scale = (2.0 * t as f64).sqrt();
    let y = head
        .iter()
        .zip(&tail)
        .map(|(h, l)| (h - l) / scale)
        .collect();
    Ok(CusumVector { t, y })
}

/// `√(t(n−t)/n) · (mean of X_1..X_t − mean of X_{t+1}..X_n)`, summed directly.
///
/// Evaluated as `((n−t)·head − t·tail)/√(n·t·(n−t))`, which cancels a common
/// mean exactly whenever the sums are exact.
pub fn normalized_cusum(x: &ObservationMatrix, t: usize) -> Result<Vec<f64>> {
    let n = x.n();
    check_split_time(n, t)?;
    let p = x.p();
    let mut head = vec![0.0; p];
    let mut tail = vec![0.0; p];
    for s in 1..=n {
        let acc = if s <= t { &mut head } else { &mut tail };
        for (h, v) in acc.iter_mut().zip(x.column(s)) {
            *h += v;
        }
    }
    let (tf, nf) = (t as f64, n as f64);
    let scale = 1.0 / (nf * tf * (nf - tf)).sqrt();
    Ok(head
        .iter()
        .zip(&tail)
        .map(|(h, l)| ((nf - tf) * h - tf * l) * scale)
        .collect())
}

/// Column prefix sums `S_t = X_1 + … + X_t`, so any CUSUM costs `O(p)`.
#[derive(Clone, Debug)]
pub struct PrefixSums {
    p: usize,
    n: usize,
    // (n + 1) blocks of length p; block 0 is zero.
    sums: Vec<f64>,
}

impl PrefixSums {
    pub fn new(x: &ObservationMatrix) -> Self {
        let (p, n) = (x.p(), x.n());
        let mut sums = vec![0.0; (n + 1) * p];
        for (t, col) in x.columns().enumerate() {
            let (prev, next) = sums.split_at_mut((t + 1) * p);
            let prev = &prev[t * p..];
            for ((s, a), v) in next[..p].iter_mut().zip(prev).zip(col) {
                *s = a + v;
            }
        }
        Self { p, n, sums }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn block(&self, t: usize) -> &[f64] {
        &self.sums[t * self.p..(t + 1) * self.p]
    }

    /// Same value as [`cusum`], from prefix sums.
    pub fn cusum(&self, t: usize) -> Result<CusumVector> {
        check_cusum_time(self.n, t)?;
        let mut y = vec![0.0; self.p];
        self.cusum_into(t, &mut y);
        Ok(CusumVector { t, y })
    }

    /// Writes `Y_t` into `out` without validation beyond debug assertions.
    pub fn cusum_into(&self, t: usize, out: &mut [f64]) {
        debug_assert!(t >= 1 && t <= self.n / 2);
        let scale = 1.0 / (2.0 * t as f64).sqrt();
        let head = self.block(t);
        let total = self.block(self.n);
        let before_tail = self.block(self.n - t);
        for (((o, h), s), b) in out.iter_mut().zip(head).zip(total).zip(before_tail) {
            *o = (h - (s - b)) * scale;
        }
    }

    /// Same value as [`normalized_cusum`], from prefix sums.
    pub fn normalized_cusum(&self, t: usize) -> Result<Vec<f64>> {
        check_split_time(self.n, t)?;
        let mut y = vec![0.0; self.p];
        self.normalized_cusum_into(t, &mut y);
        Ok(y)
    }

    pub fn normalized_cusum_into(&self, t: usize, out: &mut [f64]) {
        debug_assert!(t >= 1 && t < self.n);
        let (tf, nf) = (t as f64, self.n as f64);
        let scale = 1.0 / (nf * tf * (nf - tf)).sqrt();
        let head = self.block(t);
        let total = self.block(self.n);
        for ((o, h), s) in out.iter_mut().zip(head).zip(total) {
            *o = (nf * h - tf * s) * scale;
        }
    }
}
