//! Seed derivation and chunked random streams.
//!
//! Every Monte Carlo loop in the crate is split into fixed-size chunks. Chunk
//! `c` of a stream with seed `s` is driven by its own generator seeded with
//! `derive_seed(s, c, TAG_CHUNK)`, so results do not depend on how chunks are
//! scheduled across workers, and two estimators that share a seed see the
//! same realizations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Number of draws per chunk.
pub const CHUNK_SIZE: usize = 4096;

pub const TAG_CHUNK: u64 = 0x6368_756e_6b00_0001;
pub const TAG_SUBSET: u64 = 0x7375_6273_6574_0002;
pub const TAG_INIT: u64 = 0x696e_6974_0000_0003;
pub const TAG_SHUFFLE: u64 = 0x7368_7566_0000_0004;
pub const TAG_GRADCHECK: u64 = 0x6772_6164_0000_0005;
pub const TAG_TRAIN_DATA: u64 = 0x7472_6169_6e00_0006;
pub const TAG_TEST_DATA: u64 = 0x7465_7374_0000_0007;
pub const TAG_EVAL: u64 = 0x6576_616c_0000_0008;
pub const TAG_MODEL: u64 = 0x6d6f_6465_6c00_0009;
pub const TAG_POWER: u64 = 0x706f_7765_7200_000a;

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mixes a master seed with an index and a purpose tag.
///
/// `derive_seed(m, i, t) = splitmix64(m ^ splitmix64(i ^ splitmix64(t)))`.
pub fn derive_seed(master: u64, index: u64, tag: u64) -> u64 {
    splitmix64(master ^ splitmix64(index ^ splitmix64(tag)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn chunk_rng(seed: u64, chunk: usize) -> SimRng {
    rng_from_seed(derive_seed(seed, chunk as u64, TAG_CHUNK))
}

/// Splits `n` draws into `(chunk index, chunk length)` pairs.
pub fn chunks(n: usize) -> impl Iterator<Item = (usize, usize)> + Clone {
    (0..n.div_ceil(CHUNK_SIZE)).map(move |c| (c, CHUNK_SIZE.min(n - c * CHUNK_SIZE)))
}
