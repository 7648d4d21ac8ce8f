//! Deterministic random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] whose seed is a
//! pure function of `(master seed, purpose tag, index)`. Circuit `i` of a batch
//! can therefore be regenerated without replaying circuits `0..i`, and results
//! do not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Purpose tags keep streams for different consumers disjoint.
pub mod tag {
    pub const MODEL_CIRCUIT: u64 = 0x4d4f_4445_4c00_0001;
    pub const TRANSPILE: u64 = 0x5452_414e_5300_0002;
    pub const SAMPLING: u64 = 0x5341_4d50_4c00_0003;
    pub const HAAR_STATS: u64 = 0x4841_4152_0000_0004;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(tag)).wrapping_add(index))
}

pub fn from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(master: u64, tag: u64, index: u64) -> Rng {
    from_seed(derive_seed(master, tag, index))
}
