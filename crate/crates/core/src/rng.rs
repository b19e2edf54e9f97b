//! Keyed random streams.
//!
//! Every random draw in a simulation comes from a ChaCha8 stream keyed by
//! `(seed, setup index, purpose)` in the seed words and the block index in
//! the stream id, so the draws of a block never depend on which worker
//! evaluates it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    UePositions = 1,
    ApPositions = 2,
    Shadowing = 3,
    Pilots = 4,
    Channel = 5,
    PilotNoise = 6,
    Oracle = 7,
}

/// Derives the stream for `(setup, block, purpose)` under `seed`.
pub fn stream(seed: u64, setup: u64, block: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&setup.to_le_bytes());
    key[16..24].copy_from_slice(&(purpose as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(block);
    rng
}
