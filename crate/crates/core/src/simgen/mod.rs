// SPDX-License-Identifier: MIT OR Apache-2.0

//! Data generators, lower-bound priors and the divergence diagnostic.

mod alternative;
mod divergence;
mod noise;
mod prior;
pub mod seed;

pub use alternative::{gen_alternative, gen_null, sample_alternative, sample_null, AlternativeSpec};
pub use divergence::{chisq_divergence_mc, DivergenceEstimate, LOG_OVERFLOW};
pub use noise::{CovarianceSpec, NoiseSampler};
pub use prior::{
    coarse_exponents, dyadic_exponents, sample_prior, PriorDraw, PriorSpec, DEFAULT_GRID_CONSTANT,
};
pub use seed::{derive_seed, rng_from_seed, stream, SimRng, SEED_SCHEME_VERSION};
