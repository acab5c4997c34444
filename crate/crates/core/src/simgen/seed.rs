// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seed derivation for reproducible replications.
//!
//! Scheme version 1: a child seed is obtained by folding each path component
//! into the master seed with the SplitMix64 finaliser,
//! `h ← mix(h ⊕ mix(component + GOLDEN·(depth+1)))`. The child seed then
//! initialises a ChaCha8 generator through `SeedableRng::seed_from_u64`.
//! Both steps are pure integer arithmetic and identical on every platform.
//! Any change to this mapping must bump [`SEED_SCHEME_VERSION`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SEED_SCHEME_VERSION: u32 = 1;

/// Generator used by every simulation routine.
pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for the stream addressed by `path` under `master`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut h = splitmix_finalize(master.wrapping_add(GOLDEN));
    for (depth, &component) in path.iter().enumerate() {
        let salted = component.wrapping_add(GOLDEN.wrapping_mul(depth as u64 + 1));
        h = splitmix_finalize(h ^ splitmix_finalize(salted));
    }
    h
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Generator for the stream addressed by `path` under `master`.
pub fn stream(master: u64, path: &[u64]) -> SimRng {
    rng_from_seed(derive_seed(master, path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derivation_is_stable() {
        // frozen values guard the versioned mapping
        assert_eq!(derive_seed(0, &[]), 0xE220_A839_7B1D_CDAF);
        assert_eq!(derive_seed(42, &[1, 2]), derive_seed(42, &[1, 2]));
        assert_ne!(derive_seed(42, &[1, 2]), derive_seed(42, &[2, 1]));
        assert_ne!(derive_seed(42, &[1]), derive_seed(42, &[1, 0]));
    }

    #[test]
    fn streams_are_reproducible() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, &[3]), |r, _: u64| Some(r.random())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, &[3]), |r, _: u64| Some(r.random())).collect();
        assert_eq!(a, b);
    }
}
