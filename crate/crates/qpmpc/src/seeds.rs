//! Deterministic seed plumbing. Every random draw in the crate flows from
//! a 64-bit master seed through the fixed mixing function below, so a run
//! is reproducible bit for bit from its seed alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The stream cipher behind every simulated random choice.
pub type SeedRng = ChaCha8Rng;

/// SplitMix64 finalizer: a fixed 64-bit bijective mixer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from a parent seed and a stream tag.
///
/// Defined as `splitmix64(parent ^ splitmix64(tag))`; the double mix keeps
/// adjacent tags from producing correlated ChaCha key material.
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    splitmix64(parent ^ splitmix64(tag))
}

/// Seed for trial `index` of a batch under `master_seed`.
pub fn trial_seed(master_seed: u64, index: u64) -> u64 {
    derive_seed(master_seed, index)
}

/// Builds the deterministic generator for a seed.
pub fn rng_from_seed(seed: u64) -> SeedRng {
    ChaCha8Rng::seed_from_u64(seed)
}
