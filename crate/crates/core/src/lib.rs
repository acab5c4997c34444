// SPDX-License-Identifier: MIT OR Apache-2.0

//! Minimax tests for a sparse mean change in high-dimensional time series.
//!
//! The crate covers the CUSUM-based statistics and their truncation
//! functions ([`kernels`]), the rate and tail formulas ([`rates`]), the test
//! procedures ([`procedures`]), covariance functional estimation
//! ([`spatial`]), data and prior generators ([`simgen`]) and a Monte Carlo
//! harness for calibration and power studies ([`harness`]).
//!
//! Observation matrices are `p × n` (coordinates by time) and stored
//! column-major. Time indices in the public API are 1-based.

pub mod error;
pub mod harness;
pub mod kernels;
pub mod parallel;
pub mod procedures;
pub mod rates;
pub mod simgen;
pub mod spatial;

pub use error::{Error, Result};
pub use kernels::{CusumVector, GridKind, ObservationMatrix, TimeGrid, TruncationLevel};
pub use procedures::{
    test_adaptive, test_dense_asym, test_equicorr, test_fixed, test_sparse_asym,
    test_spatial_estimated, test_spatial_known, test_temporal, Procedure, TestOutcome, Threshold,
    ThresholdSource,
};
pub use rates::{ProblemSize, Regime};
pub use simgen::{AlternativeSpec, CovarianceSpec, PriorSpec};
pub use spatial::SpatialFunctionals;
