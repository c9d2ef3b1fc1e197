//! Deterministic seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded from a
//! 64-bit value produced by folding labelled components through SplitMix64:
//! `h = splitmix64(h ^ part)` starting from a fixed constant. String labels
//! (instance ids) enter the fold through 64-bit FNV-1a.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FOLD_INIT: u64 = 0x51_7c_c1_b7_27_22_0a_95;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(FOLD_INIT, |h, &part| splitmix64(h ^ part))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
