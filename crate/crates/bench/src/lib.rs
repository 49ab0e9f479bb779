//! Seeded workloads shared by the benchmarks.

use framekit::oracle::random_frame;
use framekit::Frame;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Gaussian frame of `n` vectors in `R^m`, fixed by `seed`.
pub fn gaussian_frame(m: usize, n: usize, seed: u64) -> Frame {
    random_frame(m, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Signal with entries `1, 2, .., m` and alternating signs.
pub fn test_signal(m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| if i % 2 == 0 { (i + 1) as f64 } else { -((i + 1) as f64) })
        .collect()
}
