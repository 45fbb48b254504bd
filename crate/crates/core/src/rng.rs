//! Seed-stream derivation.
//!
//! Every source of randomness in the toolkit draws from a `ChaCha8Rng` whose
//! 256-bit key is derived from a master seed and a purpose tag via SplitMix64.
//! Two streams with different tags (or different seeds) are independent, and
//! the derivation is fixed so results reproduce across machines.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step (Steele et al., 2014). Used only for key derivation.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// FNV-1a over the tag bytes, folded into the derivation state.
fn tag_hash(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Derive the substream RNG for `(seed, tag)`.
pub fn derive_rng(seed: u64, tag: &str) -> ChaCha8Rng {
    let mut state = seed ^ tag_hash(tag);
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Derive the substream RNG for `(seed, tag, index)`, for per-item streams
/// (bootstrap resamples, per-epoch shuffles) that must not depend on
/// execution order.
pub fn derive_indexed_rng(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    derive_rng(seed ^ index.wrapping_mul(0x9e3779b97f4a7c15), tag)
}
