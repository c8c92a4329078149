//! Deterministic, non-overlapping random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream for `(seed, replication, chain)`: the seed keys the generator and the other
/// two coordinates select one of its 2^64 independent streams.
pub fn stream(seed: u64, replication: u64, chain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication.wrapping_mul(0x1_0000).wrapping_add(chain));
    rng
}

/// Per-trial seed recorded in output tables.
pub fn trial_seed(seed: u64, n: usize, replication: usize) -> u64 {
    // SplitMix64 finalizer over the combined coordinates.
    let mut z = seed ^ ((n as u64) << 32) ^ (replication as u64);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
