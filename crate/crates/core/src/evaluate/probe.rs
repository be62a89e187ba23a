use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::PairClassifier;
use crate::corpus::{Label, LabeledPairSet};
use crate::encoders::SentenceEncoder;
use crate::error::{Error, Result};
use crate::numcore::{
    adam_step, leaky_relu, leaky_relu_grad, seeded_rng, sigmoid, xavier_with_rng, AdamConfig,
    Gradients, Matrix, ParameterSet, DEFAULT_LEAKY_SLOPE,
};

pub const DEFAULT_PROBE_HIDDEN: usize = 200;

const W1: &str = "w1";
const B1: &str = "b1";
const W2: &str = "w2";
const B2: &str = "b2";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub hidden: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without held-out improvement before stopping.
    pub patience: usize,
    pub holdout_fraction: f64,
    pub leaky_slope: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            hidden: DEFAULT_PROBE_HIDDEN,
            lr: 0.001,
            batch_size: 64,
            max_epochs: 200,
            patience: 10,
            holdout_fraction: 0.1,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub epochs: usize,
    pub best_epoch: usize,
    pub train_size: usize,
    pub holdout_size: usize,
    pub train_accuracy: f64,
    /// `None` when the dev set was too small to hold anything out.
    pub holdout_accuracy: Option<f64>,
    pub holdout_loss: Option<f64>,
}

/// One hidden layer on the concatenated pair embeddings, sigmoid output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpProbe {
    params: ParameterSet<f64>,
    input_dim: usize,
    leaky_slope: f64,
    /// Per-input shift and scale applied before the hidden layer.
    shift: Vec<f64>,
    scale: Vec<f64>,
}

struct Pass {
    pre: Vec<f64>,
    hidden: Vec<f64>,
    prob: f64,
    logit: f64,
}

impl MlpProbe {
    pub fn new(input_dim: usize, hidden: usize, leaky_slope: f64, seed: u64) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            return Err(Error::InvalidArgument(
                "probe dimensions must be positive".into(),
            ));
        }
        let mut rng = seeded_rng(seed);
        let params = ParameterSet::new()
            .with(W1, xavier_with_rng(hidden, input_dim, &mut rng)?)?
            .with(B1, Matrix::zeros(hidden, 1))?
            .with(W2, xavier_with_rng(1, hidden, &mut rng)?)?
            .with(B2, Matrix::zeros(1, 1))?;
        Ok(MlpProbe {
            params,
            input_dim,
            leaky_slope,
            shift: vec![0.0; input_dim],
            scale: vec![1.0; input_dim],
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.params.get(B1).expect("built in new").rows()
    }

    pub fn params(&self) -> &ParameterSet<f64> {
        &self.params
    }

    /// The same probe with other parameters of identical shapes.
    pub fn with_params(&self, params: ParameterSet<f64>) -> Result<Self> {
        let same = self.params.len() == params.len()
            && self
                .params
                .iter()
                .all(|(n, m)| params.get(n).is_ok_and(|p| p.shape() == m.shape()));
        if !same {
            return Err(Error::InvalidArgument(
                "probe parameters do not match its shape".into(),
            ));
        }
        Ok(MlpProbe {
            params,
            ..self.clone()
        })
    }

    /// Standardizes inputs with the mean and standard deviation of `rows`.
    fn fit_scaling(&mut self, features: &[Vec<f64>], rows: &[usize]) {
        let n = rows.len().max(1) as f64;
        for k in 0..self.input_dim {
            let mean = rows.iter().map(|&i| features[i][k]).sum::<f64>() / n;
            let var = rows
                .iter()
                .map(|&i| (features[i][k] - mean).powi(2))
                .sum::<f64>()
                / n;
            self.shift[k] = mean;
            self.scale[k] = if var > 0.0 { 1.0 / var.sqrt() } else { 1.0 };
        }
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) * s)
            .collect()
    }

    fn forward(&self, x: &[f64]) -> Pass {
        self.forward_standardized(&self.standardize(x))
    }

    fn forward_standardized(&self, x: &[f64]) -> Pass {
        let w1 = self.params.get(W1).expect("built in new");
        let b1 = self.params.get(B1).expect("built in new");
        let w2 = self.params.get(W2).expect("built in new");
        let b2 = self.params.get(B2).expect("built in new");
        let mut pre = w1.matvec(x);
        for (p, b) in pre.iter_mut().zip(b1.as_slice()) {
            *p += b;
        }
        let hidden: Vec<f64> = pre
            .iter()
            .map(|&p| leaky_relu(p, self.leaky_slope))
            .collect();
        let logit = w2.matvec(&hidden)[0] + b2.as_slice()[0];
        Pass {
            pre,
            hidden,
            prob: sigmoid(logit),
            logit,
        }
    }

    /// Probability that the concatenated input is a paraphrase pair.
    pub fn probability(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim {
            return Err(Error::InvalidArgument(format!(
                "probe expects {} inputs, got {}",
                self.input_dim,
                x.len()
            )));
        }
        Ok(self.forward(x).prob)
    }

    /// Cross-entropy of one example, accumulating `weight * gradient` into `grads`.
    pub fn backprop(&self, x: &[f64], y: f64, weight: f64, grads: &mut Gradients<f64>) -> f64 {
        let x = &self.standardize(x);
        let pass = self.forward_standardized(x);
        let w2 = self.params.get(W2).expect("built in new");
        let dlogit = (pass.prob - y) * weight;
        let [gw1, gb1, gw2, gb2] = grads.many_mut([W1, B1, W2, B2]).expect("same names");
        gw2.add_outer(&[dlogit], &pass.hidden);
        gb2.as_mut_slice()[0] += dlogit;
        let dpre: Vec<f64> = w2
            .as_slice()
            .iter()
            .zip(&pass.pre)
            .map(|(&w, &p)| dlogit * w * leaky_relu_grad(p, self.leaky_slope))
            .collect();
        gw1.add_outer(&dpre, x);
        for (g, d) in gb1.as_mut_slice().iter_mut().zip(&dpre) {
            *g += d;
        }
        bce(pass.logit, y)
    }
}

/// Binary cross-entropy from a logit, stable for large magnitudes.
pub fn bce(logit: f64, y: f64) -> f64 {
    logit.max(0.0) - logit * y + (-logit.abs()).exp().ln_1p()
}

impl PairClassifier for MlpProbe {
    fn predict(&self, a: &[f32], b: &[f32]) -> Result<Label> {
        let x = concat(a, b);
        Ok(if self.probability(&x)? >= 0.5 {
            Label::Positive
        } else {
            Label::Negative
        })
    }
}

fn concat(a: &[f32], b: &[f32]) -> Vec<f64> {
    a.iter().chain(b).map(|&v| v as f64).collect()
}

fn evaluate(probe: &MlpProbe, xs: &[Vec<f64>], ys: &[f64], idx: &[usize]) -> (f64, f64) {
    let mut loss = 0.0;
    let mut correct = 0;
    for &i in idx {
        let pass = probe.forward(&xs[i]);
        loss += bce(pass.logit, ys[i]);
        if (pass.prob >= 0.5) == (ys[i] == 1.0) {
            correct += 1;
        }
    }
    let n = idx.len().max(1) as f64;
    (loss / n, correct as f64 / n)
}

/// Trains a probe on precomputed input vectors.
pub fn train_probe_on_features(
    features: &[Vec<f64>],
    labels: &[Label],
    config: &ProbeConfig,
) -> Result<(MlpProbe, ProbeReport)> {
    if features.len() != labels.len() {
        return Err(Error::InvalidArgument(
            "features and labels differ in length".into(),
        ));
    }
    if features.is_empty() {
        return Err(Error::InvalidArgument("empty dev set".into()));
    }
    if labels.iter().all(|l| l.is_positive()) {
        return Err(Error::SingleClass("positive"));
    }
    if labels.iter().all(|l| !l.is_positive()) {
        return Err(Error::SingleClass("negative"));
    }
    if config.batch_size == 0 || !(0.0..1.0).contains(&config.holdout_fraction) {
        return Err(Error::InvalidArgument("invalid probe configuration".into()));
    }
    let dim = features[0].len();
    if features.iter().any(|f| f.len() != dim) {
        return Err(Error::InvalidArgument(
            "feature vectors differ in length".into(),
        ));
    }
    let ys: Vec<f64> = labels
        .iter()
        .map(|l| if l.is_positive() { 1.0 } else { 0.0 })
        .collect();

    let mut rng = seeded_rng(config.seed);
    let mut order: Vec<usize> = (0..features.len()).collect();
    order.shuffle(&mut rng);
    let n_hold = (features.len() as f64 * config.holdout_fraction).round() as usize;
    let n_hold = if n_hold >= features.len() { 0 } else { n_hold };
    let (holdout, train) = order.split_at(n_hold);
    let mut train = train.to_vec();

    let mut probe = MlpProbe::new(
        dim,
        config.hidden,
        config.leaky_slope,
        config.seed.wrapping_add(1),
    )?;
    probe.fit_scaling(features, &train);
    let adam = AdamConfig::with_lr(config.lr);
    let watch: Vec<usize> = if holdout.is_empty() {
        train.clone()
    } else {
        holdout.to_vec()
    };
    let (mut best_loss, _) = evaluate(&probe, features, &ys, &watch);
    let mut best = (probe.params.clone(), 0);
    let mut stale = 0;
    let mut epochs = 0;

    for epoch in 1..=config.max_epochs {
        epochs = epoch;
        train.shuffle(&mut rng);
        for chunk in train.chunks(config.batch_size) {
            let mut grads = probe.params.zeros_like();
            let w = 1.0 / chunk.len() as f64;
            for &i in chunk {
                probe.backprop(&features[i], ys[i], w, &mut grads);
            }
            if !grads.is_finite() {
                return Err(Error::NonFinite(format!("probe gradient in epoch {epoch}")));
            }
            adam_step(&mut probe.params, &grads, &adam)?;
        }
        let (loss, _) = evaluate(&probe, features, &ys, &watch);
        if loss < best_loss {
            best_loss = loss;
            best = (probe.params.clone(), epoch);
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    probe.params = best.0;
    let (_, train_accuracy) = evaluate(&probe, features, &ys, &train);
    let held = (!holdout.is_empty()).then(|| evaluate(&probe, features, &ys, holdout));
    let report = ProbeReport {
        epochs,
        best_epoch: best.1,
        train_size: train.len(),
        holdout_size: holdout.len(),
        train_accuracy,
        holdout_accuracy: held.map(|h| h.1),
        holdout_loss: held.map(|h| h.0),
    };
    Ok((probe, report))
}

/// Trains a probe on the concatenated embeddings of the dev pairs.
pub fn train_probe<E: SentenceEncoder + ?Sized>(
    dev: &LabeledPairSet,
    encoder: &E,
    config: &ProbeConfig,
) -> Result<(MlpProbe, ProbeReport)> {
    let mut features = Vec::with_capacity(dev.len());
    let mut labels = Vec::with_capacity(dev.len());
    for p in &dev.pairs {
        features.push(concat(&encoder.embed(&p.a)?, &encoder.embed(&p.b)?));
        labels.push(p.label);
    }
    train_probe_on_features(&features, &labels, config)
}
