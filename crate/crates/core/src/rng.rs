//! Seeded random streams.
//!
//! Every random draw in the benchmark comes from ChaCha8 (`rand_chacha`
//! 0.3) seeded with `ChaCha8Rng::seed_from_u64(seed)` and then switched to a
//! fixed stream id with `set_stream`. The stream id separates independent
//! consumers of the same seed, so a map seed never shares draws with a trial
//! seed. ChaCha output is platform independent, which keeps campaigns
//! reproducible across machines.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named stream ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Campaign-level draws: per-map seeds, Poisson radii, trial seeds.
    Campaign = 0,
    /// Poisson sites of one map.
    Map = 1,
    /// Start/goal rejection sampling of one trial.
    Trial = 2,
    /// Test and oracle sampling (Monte Carlo, probes).
    Oracle = 3,
    /// Obstacle radii, heights and cluster layout of one map.
    Obstacles = 4,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// SplitMix64 finaliser, used to derive child seeds from a parent seed and
/// an index without consuming a stream.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
