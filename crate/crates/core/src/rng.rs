//! Seed derivation. Every random stream in the crate is a `ChaCha8Rng` keyed by
//! a 64-bit seed mixed from a parent seed and a list of labels, so streams are
//! portable across platforms and independent of evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `parts` into `seed`. Order-sensitive: `derive(s, &[a, b]) != derive(s, &[b, a])`
/// in general.
pub fn derive(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix(seed), |acc, &p| splitmix(acc ^ splitmix(p.wrapping_add(GOLDEN))))
}

pub fn stream(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, parts))
}

// stream labels
pub(crate) const GRAPH: u64 = 1;
pub(crate) const SKILLS: u64 = 2;
pub(crate) const COSTS: u64 = 3;
pub(crate) const HISTORIES: u64 = 4;
pub(crate) const VIEW: u64 = 5;
