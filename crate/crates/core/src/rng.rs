//! Keyed random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator whose seed is
//! derived from a master seed and a small tuple of counters (for example SNR
//! index and frame index). A frame's randomness therefore depends only on its
//! key, never on how frames are distributed over workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a 64-bit key from a master seed and a sequence of counters.
pub fn derive_key(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(master), |acc, &p| mix64(acc ^ mix64(p)))
}

/// Random stream for `(master, path...)`.
pub fn stream(master: u64, path: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_key(master, path))
}

/// Purpose tags so that independent uses of one master seed never collide.
pub mod domain {
    pub const TRAIN_BATCH: u64 = 0x7472_6169_6e00_0001;
    pub const VALIDATION: u64 = 0x7661_6c69_6400_0002;
    pub const MONTE_CARLO: u64 = 0x6d6f_6e74_6500_0003;
    pub const PRUNE: u64 = 0x7072_756e_6500_0004;
    pub const CODE_SEARCH: u64 = 0x636f_6465_0000_0005;
    pub const SUBSAMPLE: u64 = 0x7375_6273_0000_0006;
}
