// SPDX-License-Identifier: MIT OR Apache-2.0

//! Pure statistical kernels: the observation matrix, CUSUM vectors,
//! truncation functions, thresholded statistics and candidate time grids.
//!
//! Time indices are 1-based throughout (`t ∈ 1..=n`), matching the usual
//! statement of the statistics; column `t` of an [`ObservationMatrix`] is the
//! observation at time `t`.

mod cusum;
mod grid;
mod matrix;
mod summation;
mod truncation;

pub use cusum::{cusum, normalized_cusum, CusumVector, PrefixSums};
pub use grid::{time_grid, GridKind, TimeGrid};
pub use matrix::ObservationMatrix;
pub use summation::NeumaierSum;
pub use truncation::{
    centered_sum_of_squares, f_a, g_a, g_a_window, g_a_with_window, h_a, loglog8n, median, median_correct, nu_a,
    threshold_stat, TruncationLevel,
};
