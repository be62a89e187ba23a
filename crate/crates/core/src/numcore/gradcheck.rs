//! Central finite-difference verification of hand-written gradients.

use rand::seq::index;

use super::init::seeded_rng;
use super::{Gradients, ParameterSet};
use crate::error::{Error, Result};

/// Coordinates checked per parameter matrix (all of them when smaller).
pub const MAX_COORDS_PER_PARAMETER: usize = 200;

#[derive(Debug, Clone)]
pub struct ParameterCheck {
    pub name: String,
    pub coordinates: usize,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub parameters: Vec<ParameterCheck>,
}

impl GradCheckReport {
    pub fn worst(&self) -> Option<&ParameterCheck> {
        self.parameters
            .iter()
            .max_by(|a, b| a.max_relative_error.total_cmp(&b.max_relative_error))
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(1e-8);
    (analytic - numeric).abs() / denom
}

/// Compares the gradient returned by `objective` against central differences
/// `(f(x + eps) - f(x - eps)) / 2 eps` on a seeded sample of coordinates.
///
/// `objective` evaluates the scalar loss and its analytic gradient at the
/// given parameters; the batch it runs on is whatever it captured.
pub fn gradient_check<F>(
    mut objective: F,
    params: &ParameterSet<f64>,
    epsilon: f64,
    seed: u64,
) -> Result<GradCheckReport>
where
    F: FnMut(&ParameterSet<f64>) -> Result<(f64, Gradients<f64>)>,
{
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let (loss, analytic) = objective(params)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!(
            "loss {loss} at unperturbed parameters"
        )));
    }

    let mut rng = seeded_rng(seed);
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        parameters: Vec::new(),
    };

    for name in params.names() {
        let n = params.get(&name)?.len();
        let coords: Vec<usize> = if n <= MAX_COORDS_PER_PARAMETER {
            (0..n).collect()
        } else {
            let mut c = index::sample(&mut rng, n, MAX_COORDS_PER_PARAMETER).into_vec();
            c.sort_unstable();
            c
        };
        let grad = analytic.get(&name)?.as_slice().to_vec();
        let mut worst = 0.0f64;
        for &i in &coords {
            let original = params.get(&name)?.as_slice()[i];
            probe.get_mut(&name)?.as_mut_slice()[i] = original + epsilon;
            let (plus, _) = objective(&probe)?;
            probe.get_mut(&name)?.as_mut_slice()[i] = original - epsilon;
            let (minus, _) = objective(&probe)?;
            probe.get_mut(&name)?.as_mut_slice()[i] = original;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss while perturbing {name}[{i}]"
                )));
            }
            let numeric = (plus - minus) / (2.0 * epsilon);
            worst = worst.max(relative_error(grad[i], numeric));
        }
        report.max_relative_error = report.max_relative_error.max(worst);
        report.parameters.push(ParameterCheck {
            name,
            coordinates: coords.len(),
            max_relative_error: worst,
        });
    }
    Ok(report)
}
