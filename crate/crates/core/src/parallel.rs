// SPDX-License-Identifier: MIT OR Apache-2.0

//! Replication-level parallelism with scheduling-independent results.
//!
//! Work items are indexed; results come back in index order and every
//! reduction downstream runs sequentially over that order, so the number of
//! worker threads never changes a reported value.

use std::sync::OnceLock;

use rayon::prelude::*;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "CPMINIMAX_THREADS";

fn configured_threads() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Shared pool sized by `CPMINIMAX_THREADS` (or rayon's default).
pub fn thread_pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = configured_threads() {
            builder = builder.num_threads(n);
        }
        builder.build().expect("failed to build worker pool")
    })
}

/// `(0..count).map(f)` evaluated on the shared pool, in index order.
pub fn par_map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    thread_pool().install(|| (0..count).into_par_iter().map(f).collect())
}
