//! Stable seed derivation.
//!
//! Every random stream in a sweep is keyed by the master seed and the
//! integer indices of the work unit that consumes it, so results do not
//! depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and a path of indices.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(master), |acc, &i| mix(acc ^ mix(i)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// Stream tags keep independent consumers of one seed apart.
pub(crate) const STREAM_PILOTS: u64 = 0x5049_4c4f;
pub(crate) const STREAM_PAYLOAD: u64 = 0x5041_594c;
pub(crate) const STREAM_CHANNEL: u64 = 0x4348_414e;
pub(crate) const STREAM_NOISE: u64 = 0x4e4f_4953;
pub(crate) const STREAM_INTERFERER: u64 = 0x494e_5446;
