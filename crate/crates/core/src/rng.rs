//! Deterministic seeding. Every random stream in the pipeline is derived from
//! the global seed, a stream tag and an item index, so results do not depend
//! on scheduling or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream tags keep independent uses of the same `(seed, index)` apart.
pub mod stream {
    pub const WALK_LENGTHS: u64 = 1;
    pub const NODE_WALKS: u64 = 2;
    pub const SPLITS: u64 = 3;
    pub const RANDOM_EMBEDDING: u64 = 4;
    pub const REPETITION: u64 = 5;
}

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15)).wrapping_add(index))
}

pub fn stream_rng(seed: u64, tag: u64, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag, index))
}
