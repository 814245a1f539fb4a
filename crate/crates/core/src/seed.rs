//! Root-seed splitting.
//!
//! Every random quantity in a run is drawn from a ChaCha8 generator keyed by
//! the run seed and a fixed per-purpose stream id, so the streams are
//! independent and adding draws to one never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    /// Scatterer positions and gains.
    Environment = 1,
    TrainChannels = 2,
    TestChannels = 3,
    /// Desk-scale subset selection.
    DataSubset = 4,
    Shuffle = 5,
    /// Sample-to-channel assignment during training.
    Pairing = 6,
    Noise = 7,
    Init = 8,
    /// Channel assignment and noise during evaluation.
    Eval = 9,
}

pub fn rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream as u64);
    r
}

/// Seed of the `index`-th repetition of an experiment.
pub fn run_seed(root: u64, index: usize) -> u64 {
    root.wrapping_add(index as u64)
}
