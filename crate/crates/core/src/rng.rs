//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by a
//! 64-bit seed. Independent streams (one per page, per query, per tier) are
//! derived with [`derive_seed`], so results do not depend on the order in
//! which work items are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the sub-stream `(seed, tag, index)`.
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    let mut h = mix64(seed);
    for b in tag.bytes() {
        h = mix64(h ^ b as u64);
    }
    mix64(h ^ index.wrapping_mul(0xA24B_AED4_963E_E407))
}

pub fn rng_from(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, tag: &str, index: u64) -> Rng {
    rng_from(derive_seed(seed, tag, index))
}
