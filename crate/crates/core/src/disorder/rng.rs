//! Seed derivation and Gaussian streams.
//!
//! Realization `r` of a master seed uses `derive_seed(master, r)`, a SplitMix64
//! finalizer over both inputs. Each field is generated from a `ChaCha8Rng`
//! seeded with its own seed, drawing standard normals with the ziggurat method
//! of `rand_distr::StandardNormal`, consumed strictly in vertex or tuple order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed for stream `index` of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: rng_from_seed(seed),
        }
    }

    #[inline]
    pub fn next_standard(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}
