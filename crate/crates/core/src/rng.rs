//! Keyed random streams. Every path draws from its own ChaCha8 stream, so
//! results do not depend on how paths are distributed over workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags keeping the different samplers independent under one seed.
pub mod purpose {
    pub const DIRECT: u64 = 1;
    pub const TIME_CHANGE: u64 = 2;
    pub const EXCURSION: u64 = 3;
    pub const CMS: u64 = 4;
    pub const LOCAL_TIME: u64 = 5;
    pub const BOOTSTRAP: u64 = 6;
    pub const PATH: u64 = 7;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for `(seed, purpose, index)`; draws within it are indexed by step.
pub fn stream(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(purpose)));
    r.set_stream(index);
    r
}
