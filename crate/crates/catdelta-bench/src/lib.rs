//! Shared input generation for the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use catdelta::synth::random_profile;

/// Seeded batch of strictly positive profile pairs of length `q`.
pub fn profile_pairs(q: usize, count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (random_profile(q, &mut rng), random_profile(q, &mut rng)))
        .collect()
}
