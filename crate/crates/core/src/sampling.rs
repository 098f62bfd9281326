//! Seeded Gaussian sampling shared by the generators and certifiers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{DenseMatrix, RealVector};

/// The one RNG used everywhere; ChaCha keeps streams stable across platforms.
pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> RealVector {
    RealVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Column-major fill, so the stream order is fixed by `(rows, cols)` alone.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}
