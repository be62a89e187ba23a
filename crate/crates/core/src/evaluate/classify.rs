use crate::corpus::{Label, LabeledPairSet};
use crate::encoders::SentenceEncoder;
use crate::error::{Error, Result};

/// Decides whether two sentence embeddings are paraphrases.
pub trait PairClassifier {
    fn predict(&self, a: &[f32], b: &[f32]) -> Result<Label>;
}

impl<P: PairClassifier + ?Sized> PairClassifier for &P {
    fn predict(&self, a: &[f32], b: &[f32]) -> Result<Label> {
        (**self).predict(a, b)
    }
}

/// Answers the same label for every pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlwaysLabel(pub Label);

impl AlwaysLabel {
    pub const POSITIVE: AlwaysLabel = AlwaysLabel(Label::Positive);
}

impl PairClassifier for AlwaysLabel {
    fn predict(&self, _: &[f32], _: &[f32]) -> Result<Label> {
        Ok(self.0)
    }
}

/// Flips every answer of the wrapped classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Complement<P>(pub P);

impl<P: PairClassifier> PairClassifier for Complement<P> {
    fn predict(&self, a: &[f32], b: &[f32]) -> Result<Label> {
        Ok(self.0.predict(a, b)?.flip())
    }
}

/// Fraction of test pairs whose predicted label matches.
pub fn classify_accuracy<P, E>(probe: &P, test: &LabeledPairSet, encoder: &E) -> Result<f64>
where
    P: PairClassifier + ?Sized,
    E: SentenceEncoder + ?Sized,
{
    if test.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let mut correct = 0usize;
    for p in &test.pairs {
        let a = encoder.embed(&p.a)?;
        let b = encoder.embed(&p.b)?;
        if probe.predict(&a, &b)? == p.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

/// The more frequent label; positive on a tie.
pub fn majority_label(set: &LabeledPairSet) -> Label {
    if set.positives() >= set.negatives() {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// Accuracy of always answering the majority label.
pub fn majority_baseline(set: &LabeledPairSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    Ok(set.positives().max(set.negatives()) as f64 / set.len() as f64)
}

/// Best accuracy of the rule `score >= t => positive` over all thresholds,
/// and the threshold achieving it (the lowest such score; infinity when
/// every pair should be negative).
pub fn best_threshold_accuracy(scores: &[f64], labels: &[Label]) -> Result<(f64, f64)> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidArgument(
            "scores and labels differ in length".into(),
        ));
    }
    if scores.is_empty() {
        return Err(Error::InvalidArgument("no scores".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("similarity score".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]));
    let negatives = labels.iter().filter(|l| !l.is_positive()).count();
    // Threshold above every score: everything negative.
    let mut correct = negatives;
    let (mut best, mut best_t) = (correct, f64::INFINITY);
    let mut k = 0;
    while k < order.len() {
        let t = scores[order[k]];
        while k < order.len() && scores[order[k]] == t {
            if labels[order[k]].is_positive() {
                correct += 1;
            } else {
                correct -= 1;
            }
            k += 1;
        }
        if correct > best {
            best = correct;
            best_t = t;
        }
    }
    Ok((best as f64 / scores.len() as f64, best_t))
}
