//! Deterministic seed derivation for parallel Monte-Carlo work.
//!
//! Every independent unit of work (replication, walk side, design cell)
//! draws from its own generator seeded through [`substream_seed`], so results
//! are bit-identical regardless of how work is scheduled across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step; the standard finalizer constants.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed and a path of stream indices.
///
/// The map is injective enough in practice for (base, id...) paths used here
/// and is stable across platforms and versions of this crate.
pub fn substream_seed(base: u64, ids: &[u64]) -> u64 {
    let mut h = splitmix64(base);
    for &id in ids {
        h = splitmix64(h ^ id.wrapping_mul(0xA24B_AED4_963E_E407));
    }
    h
}

/// A seeded generator for one unit of work.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
