//! Seeded, counter-based random streams.
//!
//! Every stochastic routine takes an explicit `seed`. Independent pieces of
//! work (one Rademacher draw, one restart, one rate-table row) get their own
//! ChaCha stream keyed by `(seed, stream)`, so serial and parallel execution
//! see identical random numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Well-known stream tags so unrelated consumers of the same seed never
/// share a stream.
pub mod tag {
    pub const GRAPH: u64 = 0x6772_6170_6800_0000;
    pub const OMEGA: u64 = 0x6f6d_6567_6100_0000;
    pub const FEATURES: u64 = 0x6665_6174_0000_0000;
    pub const TEACHER: u64 = 0x7465_6163_6800_0000;
    pub const INIT: u64 = 0x696e_6974_0000_0000;
    pub const SHUFFLE: u64 = 0x7368_7566_0000_0000;
    pub const POWER: u64 = 0x706f_7765_7200_0000;
    pub const SIGNS: u64 = 0x7369_676e_0000_0000;
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Pairwise (cascade) summation over a slice in index order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 8;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    pairwise_sum(values) / values.len() as f64
}
