//! Fixtures shared by the benchmarks.

use tasnet_core::rng::SplitMix64;
use tasnet_core::{ScalingConfig, Tensor2D};

pub fn random_vec(len: usize, seed: u64) -> Vec<f32> {
    let mut rng = SplitMix64::new(seed);
    (0..len).map(|_| rng.uniform(1.0)).collect()
}

pub fn random_tensor(channels: usize, frames: usize, seed: u64) -> Tensor2D {
    Tensor2D::new(channels, frames, random_vec(channels * frames, seed)).unwrap()
}

/// Smallest member of the reduction sweep.
pub fn small_config() -> ScalingConfig {
    ScalingConfig::scaled(2, 2, 64, 2)
}
