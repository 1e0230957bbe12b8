//! Seed derivation. Every stochastic routine takes a `u64` seed and builds a
//! ChaCha8 generator from it, so results depend only on the seed and the
//! stream label, never on call order elsewhere in the program.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Streams keep the generators for independent concerns of one run apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Graph = 1,
    Clustering = 2,
    Signal = 3,
    Instance = 4,
}

pub fn rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Seed for run `r` of an experiment whose base seed is `seed`.
pub fn run_seed(seed: u64, run: usize) -> u64 {
    seed ^ run as u64
}
