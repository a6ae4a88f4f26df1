//! Deterministic random streams.
//!
//! Every stochastic step draws from its own ChaCha stream keyed by the
//! master seed and a small tuple of coordinates (phase, iteration, index),
//! so results never depend on evaluation order or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub const TAG_BQABC: u64 = 0xB0AB;
pub const TAG_GP: u64 = 0x6E9;
pub const TAG_FITNESS: u64 = 0xF17;
pub const TAG_SUBSAMPLE: u64 = 0x5AB;
pub const TAG_SPLIT: u64 = 0x5917;
pub const TAG_REPETITION: u64 = 0x2E9;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes `master` with `coords` into a new 64-bit seed.
pub fn derive(master: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix(master), |acc, &c| splitmix(acc ^ splitmix(c)))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(master: u64, coords: &[u64]) -> Rng {
    rng(derive(master, coords))
}
