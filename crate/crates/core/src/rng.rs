//! Counter-based deterministic randomness and exact categorical sampling.
//!
//! The generator is the SplitMix64 finalizer evaluated at an explicit
//! counter, so any word of any draw is addressable as a pure function of
//! `(seed, draw index, word index)` and batches are reproducible in
//! parallel, bit-exactly on every platform.

use num_rational::BigRational;
use num_traits::Zero;

use crate::rational::pow2;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e3779b97f4a7c15;

/// Word `word` of draw `draw` under `seed`.
pub fn chunk(seed: u64, draw: u64, word: u32) -> u64 {
    let counter = draw.wrapping_mul(1 << 32).wrapping_add(word as u64 + 1);
    mix64(seed.wrapping_add(counter.wrapping_mul(GOLDEN)))
}

/// Samples an index from exact rational weights against a lazily extended
/// uniform dyadic. Returns `weights.len()` for the residual slot
/// (`1 - sum(weights)`).
///
/// The dyadic is refined 64 bits at a time until its bracket lies strictly
/// inside one category, so the draw is exact with probability one; a
/// 1024-bit cap breaks ties toward the lower endpoint.
pub fn sample_index(weights: &[BigRational], seed: u64, draw: u64) -> usize {
    let mut boundaries = Vec::with_capacity(weights.len() + 1);
    let mut acc = BigRational::zero();
    for w in weights {
        acc += w;
        boundaries.push(acc.clone());
    }

    let mut u_lo = BigRational::zero();
    for word in 0..16u32 {
        let bits = chunk(seed, draw, word);
        u_lo += BigRational::from_integer(bits.into()) * pow2(-64 * (word as i64 + 1));
        let u_hi = &u_lo + pow2(-64 * (word as i64 + 1));
        // find the slot of the bracket [u_lo, u_hi)
        let slot_lo = boundaries.iter().position(|b| u_lo < *b);
        let slot_hi = boundaries.iter().position(|b| u_hi <= *b);
        match (slot_lo, slot_hi) {
            (None, _) => return weights.len(),
            (Some(a), Some(b)) if a == b => return a,
            _ => continue,
        }
    }
    boundaries
        .iter()
        .position(|b| u_lo < *b)
        .unwrap_or(weights.len())
}
