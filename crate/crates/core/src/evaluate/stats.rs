use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::corpus::{AnnotatedPairSet, GRADES};
use crate::encoders::SentenceEncoder;
use crate::error::{Error, Result};
use crate::scalar::{dot, norm};

pub const SIGNIFICANCE_LEVEL: f64 = 0.01;

fn check_paired(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "paired samples differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two paired samples".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation input".into()));
    }
    Ok(())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample Pearson correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    check_paired(x, y)?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn midranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation: Pearson of the midranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    check_paired(x, y)?;
    pearson_r(&midranks(x), &midranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

impl WelchTest {
    pub fn significant(&self, level: f64) -> bool {
        self.p < level
    }
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let m = mean(x);
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    (m, ss / (x.len() - 1) as f64)
}

/// Unequal-variance two-sample t-test of `mean(a) - mean(b)`.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument(
            "each sample needs at least two values".into(),
        ));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    let diff = ma - mb;
    if se2 == 0.0 {
        let (t, p) = if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (diff.signum() * f64::INFINITY, 0.0)
        };
        return Ok(WelchTest {
            t,
            df: (a.len() + b.len() - 2) as f64,
            p,
        });
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (a.len() - 1) as f64 + sb * sb / (b.len() - 1) as f64);
    // P(|T| > t) = I_{df / (df + t^2)}(df / 2, 1 / 2)
    let p = if t == 0.0 {
        1.0
    } else {
        beta_reg(df / 2.0, 0.5, df / (df + t * t))
    };
    Ok(WelchTest { t, df, p })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeSummary {
    pub grade: f64,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeTest {
    pub lower: f64,
    pub higher: f64,
    /// Test of `mean(higher) - mean(lower)`; `None` when a grade has fewer than two pairs.
    pub test: Option<WelchTest>,
}

impl GradeTest {
    pub fn significant(&self) -> Option<bool> {
        self.test.map(|t| t.significant(SIGNIFICANCE_LEVEL))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeStats {
    /// Present grades, ascending.
    pub grades: Vec<GradeSummary>,
    /// One entry per pair of neighbouring present grades.
    pub tests: Vec<GradeTest>,
}

impl GradeStats {
    pub fn total(&self) -> usize {
        self.grades.iter().map(|g| g.count).sum()
    }
}

/// Per-grade similarity summaries and tests between neighbouring grades.
pub fn grade_stats_from_scores(grades: &[f64], similarities: &[f64]) -> Result<GradeStats> {
    if grades.len() != similarities.len() {
        return Err(Error::InvalidArgument(
            "grades and similarities differ in length".into(),
        ));
    }
    if grades.is_empty() {
        return Err(Error::InvalidArgument("no annotated pairs".into()));
    }
    let mut groups: Vec<(f64, Vec<f64>)> = GRADES.iter().map(|&g| (g, Vec::new())).collect();
    for (&g, &s) in grades.iter().zip(similarities) {
        let slot = groups
            .iter_mut()
            .find(|(grade, _)| *grade == g)
            .ok_or_else(|| Error::InvalidArgument(format!("invalid grade {g}")))?;
        slot.1.push(s);
    }
    groups.retain(|(_, v)| !v.is_empty());
    let summaries = groups
        .iter()
        .map(|(g, v)| {
            let (m, var) = if v.len() > 1 {
                mean_var(v)
            } else {
                (v[0], 0.0)
            };
            GradeSummary {
                grade: *g,
                count: v.len(),
                mean: m,
                std: var.sqrt(),
            }
        })
        .collect();
    let mut tests = Vec::with_capacity(groups.len().saturating_sub(1));
    for w in groups.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        let test = if lo.1.len() >= 2 && hi.1.len() >= 2 {
            Some(welch_t_test(&hi.1, &lo.1)?)
        } else {
            None
        };
        tests.push(GradeTest {
            lower: lo.0,
            higher: hi.0,
            test,
        });
    }
    Ok(GradeStats {
        grades: summaries,
        tests,
    })
}

fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let n = norm(a) * norm(b);
    if n == 0.0 {
        0.0
    } else {
        dot(a, b) / n
    }
}

/// Cosine similarity statistics of the embedded pairs, grouped by grade.
pub fn grade_similarity_stats<E: SentenceEncoder + ?Sized>(
    dev: &AnnotatedPairSet,
    encoder: &E,
) -> Result<GradeStats> {
    let mut grades = Vec::with_capacity(dev.len());
    let mut sims = Vec::with_capacity(dev.len());
    for p in &dev.pairs {
        grades.push(p.grade);
        sims.push(cosine(&encoder.embed(&p.a)?, &encoder.embed(&p.b)?));
    }
    grade_stats_from_scores(&grades, &sims)
}
