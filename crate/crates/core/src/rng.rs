//! Counter-based random streams.
//!
//! Every consumer derives its generator from a `(seed, stream)` pair, so a
//! slot's draws depend only on the session seed and the slot id. Work can be
//! split across threads in any order and still reproduce the same values.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain separators for streams that share a session seed.
pub mod domain {
    pub const ALICE_SYMBOLS: u64 = 0x5359_4d42_0000_0000;
    pub const BOB_SETTINGS: u64 = 0x424f_4253_0000_0000;
    pub const CHANNEL: u64 = 0x4348_414e_0000_0000;
    pub const PA_SEED: u64 = 0x5041_5345_0000_0000;
    pub const TAG_SEED: u64 = 0x5441_4753_0000_0000;
    pub const CODE_SEED: u64 = 0x434f_4445_0000_0000;
}

/// Generator for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a domain tag into a seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, domain: u64) -> u64 {
    let mut z = seed ^ domain;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
