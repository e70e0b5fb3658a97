//! Deterministic randomness.
//!
//! Per-cell values come from a keyed counter hash so they do not depend on
//! traversal order. Sequential draws use ChaCha8.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A 64-bit value keyed by `(seed, stream, coords)`.
pub fn cell_word(seed: u64, stream: u64, coords: &[i64]) -> u64 {
    let mut h = splitmix64(seed ^ splitmix64(stream));
    for &c in coords {
        h = splitmix64(h ^ c as u64);
    }
    h
}

pub fn cell_bit(seed: u64, coords: &[i64]) -> bool {
    cell_word(seed, 0, coords) >> 63 == 1
}

/// Numerator `m` of a dyadic real `m / 2^53` in `[0, 1)`.
pub fn cell_dyadic(seed: u64, coords: &[i64]) -> u64 {
    cell_word(seed, 1, coords) >> 11
}

pub fn dyadic_to_f64(m: u64) -> f64 {
    m as f64 / (1u64 << 53) as f64
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// An independent sequential stream derived from `seed` and a label.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(stream.wrapping_add(GOLDEN))))
}
