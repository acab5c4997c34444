// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which family of candidate changepoint scales to scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridKind {
    /// `{1, 2, 4, …, 2^⌊log₂(n/2)⌋}`.
    Dyadic,
    /// `{⌊(1+δ₂)^j⌋ : (1+δ₂)^j ≤ n/2}` together with its reflection `{n − t}`.
    Geometric { delta2: f64 },
}

/// Ascending, duplicate-free set of 1-based time indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub kind: GridKind,
    pub points: Vec<usize>,
}

impl TimeGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.points.iter().copied()
    }
}

pub fn time_grid(n: usize, kind: GridKind) -> Result<TimeGrid> {
    if n < 2 {
        return Err(Error::domain(format!("time grid needs n >= 2; got {n}")));
    }
    let points = match kind {
        GridKind::Dyadic => {
            // 2^k <= n/2  <=>  2^(k+1) <= n
            let mut pts = Vec::new();
            let mut t = 1usize;
            while 2 * t <= n {
                pts.push(t);
                t *= 2;
            }
            pts
        }
        GridKind::Geometric { delta2 } => {
            if !(delta2 > 0.0 && delta2.is_finite()) {
                return Err(Error::domain(format!(
                    "geometric grid needs a finite delta2 > 0; got {delta2}"
                )));
            }
            let half = n as f64 / 2.0;
            let ratio = 1.0 + delta2;
            let mut pts = Vec::new();
            let mut j = 0i32;
            loop {
                let v = ratio.powi(j);
                if v > half {
                    break;
                }
                let t = v.floor() as usize;
                pts.push(t);
                pts.push(n - t);
                j += 1;
            }
            pts.sort_unstable();
            pts.dedup();
            pts
        }
    };
    Ok(TimeGrid { kind, points })
}
