use rand::Rng;

use super::init::seeded_rng;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Inverted-dropout mask sampled once per sequence and reused at every time step.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask<T> {
    values: Vec<T>,
    keep_prob: f64,
}

impl<T: Scalar> DropoutMask<T> {
    pub fn ones(len: usize) -> Self {
        DropoutMask {
            values: vec![T::one(); len],
            keep_prob: 1.0,
        }
    }

    pub fn sample<R: Rng>(len: usize, keep_prob: f64, rng: &mut R) -> Result<Self> {
        if !(keep_prob > 0.0 && keep_prob <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "keep probability must lie in (0, 1], got {keep_prob}"
            )));
        }
        if keep_prob == 1.0 {
            return Ok(Self::ones(len));
        }
        let scale = T::narrow(1.0 / keep_prob);
        let values = (0..len)
            .map(|_| {
                if rng.gen_bool(keep_prob) {
                    scale
                } else {
                    T::zero()
                }
            })
            .collect();
        Ok(DropoutMask { values, keep_prob })
    }

    pub fn keep_prob(&self) -> f64 {
        self.keep_prob
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `out[i] = x[i] * mask[i]`
    #[inline]
    pub fn apply_into(&self, x: &[T], out: &mut [T]) {
        for ((o, &a), &m) in out.iter_mut().zip(x).zip(&self.values) {
            *o = a * m;
        }
    }
}

pub fn make_variational_mask<T: Scalar>(
    len: usize,
    keep_prob: f64,
    seed: u64,
) -> Result<DropoutMask<T>> {
    DropoutMask::sample(len, keep_prob, &mut seeded_rng(seed))
}
