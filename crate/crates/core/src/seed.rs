//! Deterministic seed derivation.
//!
//! Every randomized component takes a `u64` seed and draws from a
//! [`rand_chacha::ChaCha8Rng`]; sub-streams (per imputation, per fold, per
//! pipeline stage) derive their own seed from the master seed and a label so
//! that independent work can run in any order with identical results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derive a sub-seed from `master` and a stream label.
///
/// SplitMix64 finalizer over the master seed and the FNV-1a hash of the
/// label; stable across platforms and releases.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(master ^ h)
}

/// Derive a sub-seed from `master` and a stream index.
pub fn derive_seed_indexed(master: u64, label: &str, index: u64) -> u64 {
    splitmix64(derive_seed(master, label) ^ splitmix64(index.wrapping_add(0x9e37_79b9)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
