//! Input fixtures shared by the kernel benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` windows of length `len`: a daily-period sine with uniform noise.
pub fn windows(n: usize, len: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|w| {
            (0..len)
                .map(|i| {
                    let t = (w + i) as f64;
                    (t * std::f64::consts::TAU / 24.0).sin() + 0.1 * rng.gen_range(-1.0..1.0)
                })
                .collect()
        })
        .collect()
}

pub fn targets(n: usize, horizon: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n * horizon).map(|_| rng.gen_range(-1.0..1.0)).collect()
}
