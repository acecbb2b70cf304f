//! Seeded random streams.
//!
//! Every sampler draws from ChaCha8 keyed by the user seed, with a distinct
//! stream id per purpose (scopes, noise coins, literal negations, ...). ChaCha
//! is counter based, so two streams under the same key never overlap and the
//! words consumed by one purpose do not shift the words of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids. Values are part of the reproducibility contract.
pub mod streams {
    pub const SCOPES: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const NEGATIONS: u64 = 3;
    pub const ASSIGNMENT: u64 = 4;
    pub const PAIRING: u64 = 5;
    pub const BACKEND: u64 = 6;
    pub const SPECTRAL: u64 = 7;
}

/// Generator for one purpose under `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a list of words, used to derive per-task seeds.
///
/// Stable across platforms and releases, unlike `std::hash`.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}
