//! Seed handling.
//!
//! Every random stream in the pipeline is a ChaCha8 generator seeded from a
//! 64-bit value. Child seeds are derived with [`derive_seed`], a SplitMix64
//! finalizer over `parent ^ golden_ratio * (index + 1)`, so that streams for
//! trials, trees and search candidates are independent yet reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PipelineRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of child stream `index` from `parent`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1)))
}

pub fn rng_from_seed(seed: u64) -> PipelineRng {
    ChaCha8Rng::seed_from_u64(seed)
}
