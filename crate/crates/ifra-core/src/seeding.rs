//! Seed derivation: one master seed, independent deterministic streams.
//!
//! Every randomized stage derives its own seed as
//! `splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index)`.
//! Each application of splitmix64 is a bijection on `u64`, so distinct
//! `(stream, index)` pairs map to well-scrambled, collision-free seeds and
//! any stage can be reproduced in isolation from the manifest's master seed.

/// Stage identifiers for derived seed streams.
pub mod stream {
    pub const AUGMENT: u64 = 1;
    pub const SELECTION_ITERATION: u64 = 2;
    pub const SPLITS: u64 = 3;
    pub const DEMO_COHORT: u64 = 4;
}

/// splitmix64 finalizer (Steele, Lea & Flood 2014).
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed for `(stream, index)` under `master`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index)
}
