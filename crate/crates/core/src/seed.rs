//! Seed derivation for the deterministic RNG streams used throughout.
//!
//! Every stochastic operation draws from a [`ChaCha8Rng`] whose seed is
//! derived from a root seed plus a stream tag and indices, so results are
//! independent of evaluation order and thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche for cheap seed mixing.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `base` and a list of stream identifiers.
pub fn derive(base: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix64(base);
    for &p in parts {
        state = splitmix64(state ^ p);
    }
    state
}

/// A seeded RNG for the stream identified by `(base, parts)`.
pub fn rng(base: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, parts))
}

/// Derives a child seed from `base` and a byte string (e.g. a group label).
pub fn derive_bytes(base: u64, bytes: &[u8]) -> u64 {
    let mut state = splitmix64(base);
    for chunk in bytes.chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        state = splitmix64(state ^ u64::from_le_bytes(word));
    }
    state
}

/// Stream tags. Values are arbitrary but fixed; changing them changes every
/// downstream result.
pub mod tag {
    pub const HELDOUT: u64 = 0x48454C44;
    pub const PERMUTE: u64 = 0x5045524D;
    pub const AFPO: u64 = 0x4146504F;
    pub const INIT: u64 = 0x494E4954;
    pub const NEWBORN: u64 = 0x4E455742;
    pub const MUTATE: u64 = 0x4D555441;
    pub const TRUNCATE: u64 = 0x54525543;
    pub const SYNTH: u64 = 0x53594E54;
    pub const BOOT: u64 = 0x424F4F54;
}
