use serde::{Deserialize, Serialize};

use super::{Gradients, ParameterSet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..Self::default()
        }
    }
}

/// One bias-corrected Adam update of every parameter in `params`.
///
/// Every parameter needs a gradient of the same shape; nothing is updated if
/// any gradient is missing or misshapen.
pub fn adam_step<T: Scalar>(
    params: &mut ParameterSet<T>,
    grads: &Gradients<T>,
    config: &AdamConfig,
) -> Result<()> {
    if !(config.lr > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be positive, got {}",
            config.lr
        )));
    }
    for (name, p) in params.iter() {
        let g = grads.get(name)?;
        if g.shape() != p.shape() {
            return Err(Error::ShapeMismatch {
                name: name.to_owned(),
                expected: p.shape(),
                actual: g.shape(),
            });
        }
    }

    let (entries, first, second, step) = params.moments_mut();
    *step += 1;
    let t = *step as i32;
    let bias1 = 1.0 - config.beta1.powi(t);
    let bias2 = 1.0 - config.beta2.powi(t);

    for ((entry, m), v) in entries
        .iter_mut()
        .zip(first.iter_mut())
        .zip(second.iter_mut())
    {
        let g = grads.get(&entry.name)?;
        let theta = entry.value.as_mut_slice();
        let m = m.as_mut_slice();
        let v = v.as_mut_slice();
        for i in 0..theta.len() {
            let gi = g.as_slice()[i].widen();
            let mi = config.beta1 * m[i].widen() + (1.0 - config.beta1) * gi;
            let vi = config.beta2 * v[i].widen() + (1.0 - config.beta2) * gi * gi;
            m[i] = T::narrow(mi);
            v[i] = T::narrow(vi);
            let update = config.lr * (mi / bias1) / ((vi / bias2).sqrt() + config.eps);
            theta[i] = T::narrow(theta[i].widen() - update);
        }
    }
    Ok(())
}
