//! Seeded inputs shared by the benchmarks.

use dac::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform [0, 1) matrix.
pub fn unit_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_shape_simple_fn((rows, cols), || rng.gen())
}

/// `n` labels drawn from `classes` values.
pub fn labels(n: usize, classes: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0..classes)).collect()
}

/// `k` well separated Gaussian-ish blobs in `dim` dimensions.
pub fn blobs(n: usize, k: usize, dim: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_shape_fn((n, dim), |(i, _)| {
        (i % k) as f64 * 4.0 + rng.gen_range(-1.0..1.0)
    })
}
