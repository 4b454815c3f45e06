//! Seed derivation.
//!
//! All randomness is keyed by `(master seed, index, purpose)` through a
//! SplitMix64 finalizer. Trials never share a stream, and a trial's stream
//! does not depend on which thread runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every dynamic stream in the crate.
pub type SimRng = ChaCha8Rng;

/// Stream purposes, mixed into the derived seed so that the tree and the
/// dynamics of one trial are independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Tree = 0x7472_6565,
    Dynamics = 0x6479_6e61,
    Synthetic = 0x7379_6e74,
}

/// SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines two words into one well-mixed word. Not symmetric.
#[inline]
pub fn combine(a: u64, b: u64) -> u64 {
    mix64(a ^ mix64(b).rotate_left(23))
}

/// Maps a 64-bit word to a uniform double in `[0, 1)` using the top 53 bits.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Seed of trial `index` for `purpose` under `master`.
pub fn derive_seed(master: u64, index: u64, purpose: Purpose) -> u64 {
    combine(combine(master, purpose as u64), index)
}

/// Generator for trial `index` and `purpose` under `master`.
pub fn stream(master: u64, index: u64, purpose: Purpose) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, index, purpose))
}
