//! Seeded randomness.
//!
//! Every random draw in the crate goes through a ChaCha8 stream keyed by a
//! `u64` seed and a stream id, so independent consumers (initialization,
//! shuffling, dropout, sampling) never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Stream ids. Fixed so that checkpoints stay reproducible across versions.
pub mod stream {
    pub const INIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const DROPOUT: u64 = 3;
    pub const PAIRS: u64 = 4;
    pub const SUBSETS: u64 = 5;
}

pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
