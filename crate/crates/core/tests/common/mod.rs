// SPDX-License-Identifier: MIT OR Apache-2.0
#![allow(dead_code)]

use cpminimax_core::harness::{run_experiment, CellRecord, ExperimentConfig};
use cpminimax_core::simgen::{stream, SimRng};
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

pub fn normals(seed: u64, path: &[u64], count: usize) -> Vec<f64> {
    let mut rng: SimRng = stream(seed, path);
    (0..count).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Kolmogorov-Smirnov distance of `sample` from N(0, 1).
pub fn ks_normal(sample: &[f64]) -> f64 {
    let law = Normal::new(0.0, 1.0).unwrap();
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = law.cdf(x);
            (c - i as f64 / m).abs().max(((i + 1) as f64 / m - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic one-sample KS critical value at level 1%.
pub fn ks_critical_1pct(m: usize) -> f64 {
    1.6276 / (m as f64).sqrt()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

/// Composite Simpson rule on `[lo, hi]` with `steps` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, steps: usize) -> f64 {
    let steps = steps + steps % 2;
    let h = (hi - lo) / steps as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

/// `E(Z² | |Z| ≥ a)` by quadrature of the shifted, rescaled tail integrals.
pub fn nu_a_quadrature(a: f64) -> f64 {
    // z = a + u; the common factor e^{-a²/2} cancels
    let kernel = |u: f64| (-a * u - 0.5 * u * u).exp();
    let span = 40.0 / (1.0 + a);
    let steps = 40_000;
    let num = simpson(|u| (a + u) * (a + u) * kernel(u), 0.0, span, steps);
    let den = simpson(kernel, 0.0, span, steps);
    num / den
}

pub fn run(cfg_json: &str) -> Vec<CellRecord> {
    let cfg = ExperimentConfig::from_json(cfg_json).expect("valid config");
    let report = run_experiment(&cfg).expect("experiment runs");
    for c in &report.cells {
        assert!(c.error.is_none(), "cell failed: {:?}", c.error);
    }
    report.cells
}
