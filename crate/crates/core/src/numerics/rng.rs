//! Seeded random streams.
//!
//! The generator is ChaCha with 8 rounds (`rand_chacha::ChaCha8Rng`), keyed
//! through `SeedableRng::seed_from_u64`. ChaCha output is defined bit-for-bit
//! by the cipher, so a seed reproduces the same stream on every platform.
//! Normal deviates use the ziggurat sampler of `rand_distr::StandardNormal`;
//! Poisson deviates use `rand_distr::Poisson`.
//!
//! Independent sub-streams (one per trial or repeat) are derived as
//! `seed ^ index`, so parallel evaluation order never changes results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

pub fn rng_stream(seed: u64) -> RngStream {
    RngStream {
        inner: ChaCha8Rng::seed_from_u64(seed),
    }
}

impl RngStream {
    /// Stream for sub-task `index` of a run seeded with `seed`.
    pub fn substream(seed: u64, index: u64) -> Self {
        rng_stream(seed ^ index)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Poisson count with the given mean; a zero mean always yields zero.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            return 0;
        }
        match Poisson::new(mean) {
            Ok(dist) => dist.sample(&mut self.inner) as u64,
            Err(_) => mean.round() as u64,
        }
    }
}
