//! Per-trial random streams.
//!
//! Every Monte Carlo trial draws from its own ChaCha8 stream, keyed by the
//! master seed mixed with a purpose tag and selected by the trial index.
//! A trial's randomness therefore depends only on `(seed, tag, index)`, never
//! on which worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags; distinct experiments never share a stream.
pub mod tag {
    pub const DISORDER_PATH: u64 = 1;
    pub const INFLUENCE: u64 = 2;
    pub const BOOST_SELECT: u64 = 3;
    pub const BOOST_CERTIFY: u64 = 4;
    pub const Q_OF_A: u64 = 5;
    pub const REMOVAL: u64 = 6;
    pub const ANGLE_SCAN: u64 = 7;
    pub const ADMISSIBILITY: u64 = 8;
    pub const LEMMA_SUITE: u64 = 9;
    pub const INSTANCE: u64 = 10;
    pub const REFERENCE: u64 = 11;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The stream for trial `index` of purpose `tag` under master `seed`.
pub fn stream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(tag)));
    rng.set_stream(index);
    rng
}
