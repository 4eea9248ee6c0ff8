//! Shared fixtures for the benchmarks.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sigmoid-like outputs and labels for a batch, shaped like one MNIST10
/// training step.
pub fn output_batch(n: usize, c: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outputs = Array2::from_shape_fn((n, c), |_| rng.gen_range(0.001..0.999));
    let labels = (0..n).map(|_| rng.gen_range(0..c)).collect();
    (outputs, labels)
}

/// A feature batch in the unit cube.
pub fn feature_batch(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, d), |_| rng.gen_range(0.0..1.0))
}
