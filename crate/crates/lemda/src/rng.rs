//! Deterministic RNG streams.
//!
//! Every randomized step derives its own generator from the run seed plus a
//! tag path (e.g. `[TREE, tree_index]`), so parallel and serial execution
//! visit identical random sequences.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TREE: u64 = 1;
pub const MDA: u64 = 2;
pub const FOLDS: u64 = 3;
pub const INNER_SPLIT: u64 = 4;
pub const MLP: u64 = 5;
pub const SYNTH: u64 = 6;
pub const EXPERIMENT: u64 = 7;

/// SplitMix64 step, used to mix tag words into the seed.
fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derive an independent sub-seed from `seed` and a tag path.
pub fn child_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix(seed);
    for &tag in tags {
        state = splitmix(state ^ tag.wrapping_mul(0xd6e8_feb8_6659_fd93));
    }
    state
}

/// Derive an independent generator from `seed` and a tag path.
pub fn stream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(seed, tags))
}
