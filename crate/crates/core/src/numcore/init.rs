use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Range used for the word embedding matrix.
pub const EMBEDDING_INIT_RANGE: (f64, f64) = (-0.01, 0.01);

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_init<T: Scalar>(
    rows: usize,
    cols: usize,
    low: f64,
    high: f64,
    seed: u64,
) -> Result<Matrix<T>> {
    let mut rng = seeded_rng(seed);
    uniform_with_rng(rows, cols, low, high, &mut rng)
}

pub fn uniform_with_rng<T: Scalar, R: Rng>(
    rows: usize,
    cols: usize,
    low: f64,
    high: f64,
    rng: &mut R,
) -> Result<Matrix<T>> {
    if !(low < high) {
        return Err(Error::InvalidArgument(format!(
            "uniform range needs low < high, got [{low}, {high}]"
        )));
    }
    let data = (0..rows * cols)
        .map(|_| {
            T::narrow(rng.gen_range(low..=high))
                .max(T::narrow(low))
                .min(T::narrow(high))
        })
        .collect();
    Matrix::from_vec(rows, cols, data)
}

/// Glorot bound `sqrt(6 / (rows + cols))`.
pub fn xavier_bound(rows: usize, cols: usize) -> f64 {
    (6.0 / (rows + cols) as f64).sqrt()
}

pub fn xavier_init<T: Scalar>(rows: usize, cols: usize, seed: u64) -> Result<Matrix<T>> {
    let mut rng = seeded_rng(seed);
    xavier_with_rng(rows, cols, &mut rng)
}

pub fn xavier_with_rng<T: Scalar, R: Rng>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> Result<Matrix<T>> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument(format!(
            "xavier init needs non-empty shape, got {rows}x{cols}"
        )));
    }
    let b = xavier_bound(rows, cols);
    uniform_with_rng(rows, cols, -b, b, rng)
}
