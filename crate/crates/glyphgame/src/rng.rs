//! Seeded random number streams.
//!
//! All randomness in a run flows from one root seed through named
//! sub-streams, so each component (trial sampling, parameter init,
//! action sampling, analysis, ...) can be replayed independently of
//! the others. Streams are ChaCha8 instances sharing the seed but
//! carrying distinct stream ids.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Stream ids for the named sub-streams of a run.
pub mod streams {
    /// Parameter initialization (sender first, then receiver).
    pub const INIT: u64 = 1;
    /// Minibatch shuffling during PPO epochs.
    pub const UPDATE: u64 = 2;
    /// Trial sampling for consistency analysis.
    pub const ANALYSIS: u64 = 3;
    /// Trial sampling for evaluation.
    pub const EVAL: u64 = 4;
    /// Synthetic dataset generation.
    pub const DATASET: u64 = 5;

    /// Trial sampling stream for a rollout worker.
    pub fn trial(worker: usize) -> u64 {
        0x0100_0000 + worker as u64
    }

    /// Action sampling stream for a rollout worker.
    pub fn action(worker: usize) -> u64 {
        0x0200_0000 + worker as u64
    }
}

/// A deterministic random stream identified by (seed, stream id).
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { rng, seed, stream }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Position within the stream; stored in checkpoints.
    pub fn word_pos(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub fn set_word_pos(&mut self, pos: u128) {
        self.rng.set_word_pos(pos);
    }

    /// Uniform draw from [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform draw from [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        self.rng.random_range(0..n)
    }

    /// Gaussian draw with mean 0 and the given standard deviation.
    pub fn normal(&mut self, sigma: f64) -> f64 {
        if sigma == 0.0 {
            return 0.0;
        }
        Normal::new(0.0, sigma)
            .expect("sigma is finite and non-negative")
            .sample(&mut self.rng)
    }

    /// Uniform in-place shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        xs.shuffle(&mut self.rng);
    }
}
