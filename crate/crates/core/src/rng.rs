//! Counter-based random streams.
//!
//! Every random object is produced from `stream(seed, index)`: a ChaCha8
//! generator (`rand_chacha` 0.9) keyed by `seed_from_u64(seed)` and set to
//! stream number `index`. Draw `i` of a Monte Carlo loop uses stream `i`,
//! so results do not depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Name recorded in reports.
pub const PRNG_NAME: &str = "ChaCha8 (rand_chacha 0.9; key = seed_from_u64(seed), stream = draw index)";

pub fn stream(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mixes a label into a seed so nested experiments get unrelated keys.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
