use std::path::Path;

use serde::{Deserialize, Serialize};

use super::io::read_text;
use crate::error::{Error, Result};

/// Estimated fraction of true paraphrases among the first `prefix_size`
/// pairs of a ranked corpus, linearly interpolated between points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityCurve {
    points: Vec<(u64, f64)>,
}

impl QualityCurve {
    pub fn new(points: Vec<(u64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("quality curve has no points".into()));
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidArgument(
                "quality curve prefix sizes must be strictly increasing".into(),
            ));
        }
        if let Some(&(_, f)) = points.iter().find(|(_, f)| !(0.0..=1.0).contains(f)) {
            return Err(Error::InvalidArgument(format!(
                "clean fraction {f} outside [0, 1]"
            )));
        }
        Ok(QualityCurve { points })
    }

    pub fn points(&self) -> &[(u64, f64)] {
        &self.points
    }

    pub fn max_fraction(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Interpolated clean fraction at `prefix`, or `None` outside the curve.
    pub fn fraction_at(&self, prefix: u64) -> Option<f64> {
        let first = self.points.first()?;
        let last = self.points.last()?;
        if prefix < first.0 || prefix > last.0 {
            return None;
        }
        let i = self.points.partition_point(|p| p.0 <= prefix);
        if i == self.points.len() {
            return Some(last.1);
        }
        let (x0, f0) = self.points[i - 1];
        let (x1, f1) = self.points[i];
        let t = (prefix - x0) as f64 / (x1 - x0) as f64;
        Some(f0 + t * (f1 - f0))
    }
}

/// Largest prefix size whose interpolated clean fraction is at least `target`.
pub fn select_prefix_for_quality(curve: &QualityCurve, target: f64) -> Result<u64> {
    const SLACK: f64 = 1e-9;
    let max = curve.max_fraction();
    if target > max + SLACK {
        return Err(Error::UnattainableQuality { target, max });
    }
    let pts = curve.points();
    let (x_last, f_last) = pts[pts.len() - 1];
    if f_last >= target - SLACK {
        return Ok(x_last);
    }
    // Walk back to the last segment where the curve crosses the target.
    for w in pts.windows(2).rev() {
        let ((x0, f0), (x1, f1)) = (w[0], w[1]);
        if f0 >= target - SLACK {
            let t = ((target - f0) / (f1 - f0)).clamp(0.0, 1.0);
            let x = x0 as f64 + t * (x1 - x0) as f64;
            return Ok(((x + SLACK).floor() as u64).clamp(x0, x1));
        }
    }
    unreachable!("target {target} <= curve maximum {max}")
}

/// Reads `prefix_size<TAB>clean_fraction` lines; `#` starts a comment line.
pub fn load_quality_curve(path: impl AsRef<Path>) -> Result<QualityCurve> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = || Error::parse(path, i + 1, "expected `prefix_size<TAB>clean_fraction`");
        if fields.len() != 2 {
            return Err(bad());
        }
        let x: u64 = fields[0].trim().parse().map_err(|_| bad())?;
        let f: f64 = fields[1].trim().parse().map_err(|_| bad())?;
        points.push((x, f));
    }
    if points.is_empty() {
        return Err(Error::EmptyInput(path.to_path_buf()));
    }
    QualityCurve::new(points)
}
