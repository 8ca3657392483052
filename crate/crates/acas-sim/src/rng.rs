//! Deterministic sub-stream derivation.
//!
//! Every stochastic component draws from its own seeded stream, derived from
//! (master seed, epoch index, stream id). Epochs can then run in parallel
//! while keeping every draw reproducible and independent of execution order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers for the per-epoch noise sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Clock,
    Iono,
    Multipath,
    Awgn,
    E1Measurement,
    NoiseFloor,
    Spoofer,
    E1Batch,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Clock => 1,
            Stream::Iono => 2,
            Stream::Multipath => 3,
            Stream::Awgn => 4,
            Stream::E1Measurement => 5,
            Stream::NoiseFloor => 6,
            Stream::Spoofer => 7,
            Stream::E1Batch => 8,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derive the RNG for one (epoch, stream) pair.
pub fn substream(master_seed: u64, epoch: u64, stream: Stream) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    let mut state = splitmix64(master_seed ^ 0xacab_5eed_0000_0000);
    state = splitmix64(state ^ epoch.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    state = splitmix64(state ^ stream.id());
    for chunk in seed.chunks_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
