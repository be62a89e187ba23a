use std::sync::atomic::{AtomicU64, Ordering};

use crate::corpus::Label;
use crate::scalar::{dot, norm, Scalar};

pub const DEFAULT_MARGIN: f64 = 0.4;

static ZERO_NORM_WARNINGS: AtomicU64 = AtomicU64::new(0);

/// Number of cosine distances taken with a zero-norm argument so far in this process.
pub fn zero_norm_warnings() -> u64 {
    ZERO_NORM_WARNINGS.load(Ordering::Relaxed)
}

/// `1 - cos(u, v)`. A zero vector is treated as orthogonal to everything.
pub fn cosine_distance<T: Scalar>(u: &[T], v: &[T]) -> f64 {
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        if ZERO_NORM_WARNINGS.fetch_add(1, Ordering::Relaxed) == 0 {
            log::warn!("cosine distance of a zero vector taken as 1");
        }
        return 1.0;
    }
    if u == v {
        return 0.0;
    }
    (1.0 - dot(u, v) / (dot(u, u) * dot(v, v)).sqrt()).clamp(0.0, 2.0)
}

/// Cosine distance and its gradients with respect to both arguments.
pub fn cosine_distance_grad<T: Scalar>(u: &[T], v: &[T]) -> (f64, Vec<f64>, Vec<f64>) {
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return (
            cosine_distance(u, v),
            vec![0.0; u.len()],
            vec![0.0; v.len()],
        );
    }
    let cos = dot(u, v) / (dot(u, u) * dot(v, v)).sqrt();
    let inv = 1.0 / (nu * nv);
    // d(1 - cos)/du = -(v / (|u||v|) - cos u / |u|^2)
    let du = u
        .iter()
        .zip(v)
        .map(|(&a, &b)| -(b.widen() * inv - cos * a.widen() / (nu * nu)))
        .collect();
    let dv = u
        .iter()
        .zip(v)
        .map(|(&a, &b)| -(a.widen() * inv - cos * b.widen() / (nv * nv)))
        .collect();
    ((1.0 - cos).clamp(0.0, 2.0), du, dv)
}

/// Positive pairs pay their distance; negative pairs pay `max(0, m - d)^2`.
pub fn margin_loss(distance: f64, label: Label, margin: f64) -> f64 {
    match label {
        Label::Positive => distance,
        Label::Negative => {
            let gap = (margin - distance).max(0.0);
            gap * gap
        }
    }
}

/// `d margin_loss / d distance`.
pub fn margin_loss_grad(distance: f64, label: Label, margin: f64) -> f64 {
    match label {
        Label::Positive => 1.0,
        Label::Negative if distance < margin => -2.0 * (margin - distance),
        Label::Negative => 0.0,
    }
}
