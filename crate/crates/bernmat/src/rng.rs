//! Counter-based reproducible randomness.
//!
//! Every random draw in this crate flows from a `(master, stream, counter)`
//! triple hashed into a ChaCha8 key. Independent trials get independent
//! counters, so a parallel run produces the same per-trial byte streams as a
//! sequential one regardless of scheduling — the contract the experiment
//! layer's bit-reproducibility rests on.

use num::rational::Ratio;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

/// Identifies one lane of randomness. Identical `(master, stream)` pairs
/// yield identical byte streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub master: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    /// Lane for trial `trial` of the experiment tagged `tag`.
    ///
    /// Tags are small constants (< 2¹⁶) and trial indices stay below 2⁴⁸,
    /// so the packing is injective.
    pub fn for_trial(master: u64, tag: u16, trial: u64) -> Self {
        debug_assert!(trial < 1 << 48);
        Self { master, stream: ((tag as u64) << 48) | trial }
    }

    /// The generator for this lane.
    pub fn rng(self) -> ChaCha8Rng {
        derive_rng(self.master, self.stream, 0)
    }
}

/// splitmix64 finalizer; statistically strong mixing of one word.
fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash the triple into a 256-bit ChaCha8 key (absorb sequentially, then
/// squeeze four words). Distinct triples collide with probability ~2⁻⁶⁴,
/// negligible against Monte Carlo error.
pub fn derive_rng(master: u64, stream: u64, counter: u64) -> ChaCha8Rng {
    let mut state = 0u64;
    for w in [master, stream, counter] {
        state = mix(state ^ w);
    }
    let mut key = [0u8; 32];
    let mut t = state;
    for chunk in key.chunks_exact_mut(8) {
        t = mix(t);
        chunk.copy_from_slice(&t.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// One Bernoulli(p) draw by comparing a 64-bit uniform against
/// `⌊p·2⁶⁴⌋`; the bias is at most 2⁻⁶⁴, negligible against Monte Carlo
/// error. Endpoints p=0 and p=1 are exact.
pub fn bernoulli(rng: &mut ChaCha8Rng, p: Ratio<i64>) -> bool {
    let (num, den) = (*p.numer(), *p.denom());
    debug_assert!(den > 0 && (0..=den).contains(&num));
    if num == 0 {
        return false;
    }
    if num == den {
        return true;
    }
    let threshold = ((num as u128) << 64) / den as u128;
    (rng.next_u64() as u128) < threshold
}

/// Unbiased uniform draw from `0..m` (Lemire's multiply-shift with
/// rejection); exact, no modulo bias.
pub fn uniform_below(rng: &mut ChaCha8Rng, m: u64) -> u64 {
    assert!(m > 0, "uniform_below requires a nonempty range");
    let reject_below = m.wrapping_neg() % m; // (2⁶⁴ − m) mod m
    loop {
        let x = rng.next_u64();
        let prod = (x as u128) * (m as u128);
        if (prod as u64) >= reject_below {
            return (prod >> 64) as u64;
        }
    }
}

/// Uniform f64 in [0, 1) with 53 random bits.
pub fn uniform_unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
