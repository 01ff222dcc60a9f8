//! Random number streams.
//!
//! Every stochastic component draws from ChaCha8 seeded with the caller's
//! 64-bit seed; topology sampling and transaction sampling use separate
//! ChaCha streams of the same seed, so regenerating a network never perturbs
//! the transaction sequence and vice versa.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Topology = 0,
    Transactions = 1,
}

pub fn seeded_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
