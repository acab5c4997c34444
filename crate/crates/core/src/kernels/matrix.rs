// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::error::{Error, Result};

/// A `p × n` real data matrix whose column `t` is the observation at time `t`.
///
/// Storage is column-major (time-major): the `p` coordinates of time `t`
/// are contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationMatrix {
    p: usize,
    n: usize,
    values: Vec<f64>,
}

impl ObservationMatrix {
    /// Builds a matrix from column-major values, checking shape and finiteness.
    pub fn from_column_major(p: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if p == 0 {
            return Err(Error::domain("observation matrix needs p >= 1"));
        }
        if n < 2 {
            return Err(Error::domain(format!(
                "observation matrix needs n >= 2; got {n}"
            )));
        }
        if values.len() != p * n {
            return Err(Error::domain(format!(
                "expected {} values for a {p}x{n} matrix, got {}",
                p * n,
                values.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite entry at row {}, time {}",
                idx % p,
                idx / p + 1
            )));
        }
        Ok(Self { p, n, values })
    }

    /// Builds a matrix from `p` rows of length `n`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::domain("rows have unequal lengths"));
        }
        let mut values = vec![0.0; p * n];
        for (j, row) in rows.iter().enumerate() {
            for (t, &v) in row.iter().enumerate() {
                values[t * p + j] = v;
            }
        }
        Self::from_column_major(p, n, values)
    }

    pub fn zeros(p: usize, n: usize) -> Result<Self> {
        Self::from_column_major(p, n, vec![0.0; p * n])
    }

    /// Every column equal to `mu`.
    pub fn constant_columns(mu: &[f64], n: usize) -> Result<Self> {
        let mut values = Vec::with_capacity(mu.len() * n);
        for _ in 0..n {
            values.extend_from_slice(mu);
        }
        Self::from_column_major(mu.len(), n, values)
    }

    pub(crate) fn from_parts_unchecked(p: usize, n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), p * n);
        Self { p, n, values }
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Column-major values.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Observation at time `t` (1-based).
    #[inline]
    pub fn column(&self, t: usize) -> &[f64] {
        let start = (t - 1) * self.p;
        &self.values[start..start + self.p]
    }

    pub fn columns(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.values.chunks_exact(self.p)
    }

    #[inline]
    pub fn get(&self, row: usize, t: usize) -> f64 {
        self.values[(t - 1) * self.p + row]
    }

    /// Row `j` as a time series of length `n`.
    pub fn row(&self, j: usize) -> Vec<f64> {
        self.columns().map(|c| c[j]).collect()
    }

    /// The same observations in reverse time order.
    pub fn reversed_in_time(&self) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for col in self.values.chunks_exact(self.p).rev() {
            values.extend_from_slice(col);
        }
        Self::from_parts_unchecked(self.p, self.n, values)
    }

    /// `X + mu 1ᵀ`: adds `mu` to every column.
    pub fn shifted(&self, mu: &[f64]) -> Result<Self> {
        if mu.len() != self.p {
            return Err(Error::domain("shift vector length differs from p"));
        }
        let mut out = self.clone();
        for col in out.values.chunks_exact_mut(self.p) {
            for (x, m) in col.iter_mut().zip(mu) {
                *x += m;
            }
        }
        Self::from_column_major(out.p, out.n, out.values)
    }

    /// Rows reordered so that new row `j` is old row `perm[j]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.p];
        if perm.len() != self.p || perm.iter().any(|&j| j >= self.p || std::mem::replace(&mut seen[j], true)) {
            return Err(Error::domain("row permutation is not a permutation of 0..p"));
        }
        let mut values = Vec::with_capacity(self.values.len());
        for col in self.values.chunks_exact(self.p) {
            values.extend(perm.iter().map(|&j| col[j]));
        }
        Ok(Self::from_parts_unchecked(self.p, self.n, values))
    }

    /// Elementwise sum with another matrix of the same shape.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.p != other.p || self.n != other.n {
            return Err(Error::domain("matrix shapes differ"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Self::from_column_major(self.p, self.n, values)
    }

    /// True when all columns are bit-identical (zero sample variance everywhere).
    pub fn has_identical_columns(&self) -> bool {
        let first = self.column(1);
        self.columns().all(|c| c == first)
    }
}
