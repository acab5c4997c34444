// SPDX-License-Identifier: MIT OR Apache-2.0

//! Benchmarks for the statistic kernels and the test procedures.

use std::hint::black_box;

use criterion::{BenchmarkId, Criterion};
use cpminimax_core::kernels::{nu_a, threshold_stat, PrefixSums, TruncationLevel};
use cpminimax_core::procedures::{test_adaptive, test_fixed, test_spatial_estimated};
use cpminimax_core::simgen::{gen_null, CovarianceSpec};
use cpminimax_core::ObservationMatrix;

fn null_matrix(p: usize, n: usize) -> ObservationMatrix {
    gen_null(p, n, &vec![0.0; p], &CovarianceSpec::Identity, 1).expect("valid sizes")
}

pub fn kernels(c: &mut Criterion) {
    c.bench_function("nu_a/grid", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for i in 0..200 {
                acc += nu_a(black_box(f64::from(i) * 0.05)).unwrap();
            }
            acc
        })
    });

    let mut group = c.benchmark_group("cusum_dyadic_scan");
    for &(p, n) in &[(50, 128), (500, 512), (2000, 1024)] {
        let x = null_matrix(p, n);
        let level = TruncationLevel::new(2.0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{p}x{n}")), &x, |b, x| {
            b.iter(|| {
                let sums = PrefixSums::new(x);
                let mut y = vec![0.0; x.p()];
                let mut best = f64::NEG_INFINITY;
                let mut t = 1;
                while 2 * t <= x.n() {
                    sums.cusum_into(t, &mut y);
                    best = best.max(threshold_stat(&y, &level));
                    t *= 2;
                }
                best
            })
        });
    }
    group.finish();
}

pub fn procedures(c: &mut Criterion) {
    let x = null_matrix(100, 256);
    c.bench_function("test_fixed/100x256/s=5", |b| {
        b.iter(|| test_fixed(black_box(&x), 5, 1.0).unwrap().reject)
    });
    c.bench_function("test_adaptive/100x256", |b| {
        b.iter(|| test_adaptive(black_box(&x), 1.0).unwrap().reject)
    });
    let y = null_matrix(20, 300);
    c.bench_function("test_spatial_estimated/20x300", |b| {
        b.iter(|| test_spatial_estimated(black_box(&y), 1.0).unwrap().reject)
    });
}
