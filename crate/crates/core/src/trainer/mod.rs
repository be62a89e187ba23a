//! Contrastive training of sentence encoders on labeled pairs.

mod checkpoint;
mod loss;

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    binarize_annotations, build_vocab, AnnotatedPairSet, Label, LabeledPairSet, Vocabulary,
};
use crate::encoders::{
    Encoder, EncoderKind, EncoderModel, GranMasks, GranOptions, DEFAULT_DIM, DEFAULT_HIDDEN,
    DEFAULT_MAX_LEN,
};
use crate::error::{Error, Result};
use crate::evaluate::best_threshold_accuracy;
use crate::numcore::{adam_step, seeded_rng, Activation, AdamConfig, Gradients};
use crate::scalar::Scalar;

pub use checkpoint::{
    load_checkpoint, load_checkpoint_as, read_checkpoint, save_checkpoint, write_checkpoint,
    Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use loss::{
    cosine_distance, cosine_distance_grad, margin_loss, margin_loss_grad, zero_norm_warnings,
    DEFAULT_MARGIN,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub encoder: EncoderKind,
    pub margin: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Keep probability of the recurrent dropout masks; 1 disables dropout.
    pub keep_prob: f64,
    pub seed: u64,
    pub dim: usize,
    pub hidden: usize,
    pub activation: Activation,
    pub gate_biases: bool,
    /// Tokens seen fewer times than this map to the unknown id.
    pub min_count: usize,
    /// Stop after this many epochs without dev improvement. Needs a dev set.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            encoder: EncoderKind::Gran,
            margin: DEFAULT_MARGIN,
            lr: AdamConfig::default().lr,
            batch_size: 128,
            epochs: 10,
            keep_prob: 0.8,
            seed: 42,
            dim: DEFAULT_DIM,
            hidden: DEFAULT_HIDDEN,
            activation: Activation::default(),
            gate_biases: false,
            min_count: 1,
            patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_owned()));
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return bad("margin must be a finite non-negative number");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            return bad("keep probability must lie in (0, 1]");
        }
        if self.dim == 0 || (self.encoder == EncoderKind::Gran && self.hidden == 0) {
            return bad("dimensions must be positive");
        }
        if self.patience == Some(0) {
            return bad("patience must be at least 1");
        }
        Ok(())
    }

    pub fn gran_options(&self) -> GranOptions {
        GranOptions {
            hidden: self.hidden,
            activation: self.activation,
            gate_biases: self.gate_biases,
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig::with_lr(self.lr)
    }

    pub fn batches_per_epoch(&self, pairs: usize) -> usize {
        pairs.div_ceil(self.batch_size)
    }
}

/// A labeled pair as token ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedPair {
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    pub label: Label,
}

pub fn encode_pairs<T: Scalar>(model: &EncoderModel<T>, set: &LabeledPairSet) -> Vec<EncodedPair> {
    set.pairs
        .iter()
        .map(|p| EncodedPair {
            a: model.token_ids(&p.a),
            b: model.token_ids(&p.b),
            label: p.label,
        })
        .collect()
}

fn narrow<T: Scalar>(g: &[f64], scale: f64) -> Vec<T> {
    g.iter().map(|&x| T::narrow(x * scale)).collect()
}

/// Loss of one pair. With `grads`, also accumulates `weight * d loss / d params`.
pub fn pair_loss<T: Scalar>(
    encoder: &Encoder<T>,
    pair: &EncodedPair,
    margin: f64,
    masks: [Option<&GranMasks<T>>; 2],
    grads: Option<(&mut Gradients<T>, f64)>,
) -> Result<f64> {
    let (ua, ca) = encoder.forward(&pair.a, masks[0])?;
    let (ub, cb) = encoder.forward(&pair.b, masks[1])?;
    let (d, da, db) = cosine_distance_grad(&ua, &ub);
    let loss = margin_loss(d, pair.label, margin);
    if let Some((grads, weight)) = grads {
        let g = margin_loss_grad(d, pair.label, margin) * weight;
        if g != 0.0 {
            encoder.backward(&ca, &narrow::<T>(&da, g), grads)?;
            encoder.backward(&cb, &narrow::<T>(&db, g), grads)?;
        }
    }
    Ok(loss)
}

/// Mean loss over a batch and its gradient, without dropout.
pub fn batch_loss_and_grad<T: Scalar>(
    encoder: &Encoder<T>,
    batch: &[EncodedPair],
    margin: f64,
) -> Result<(f64, Gradients<T>)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let mut grads = encoder.params().zeros_like();
    let w = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for pair in batch {
        total += pair_loss(encoder, pair, margin, [None, None], Some((&mut grads, w)))?;
    }
    Ok((total * w, grads))
}

/// Mean loss over a set of pairs, without dropout.
pub fn mean_loss<T: Scalar>(
    encoder: &Encoder<T>,
    pairs: &[EncodedPair],
    margin: f64,
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no pairs".into()));
    }
    let mut total = 0.0;
    for p in pairs {
        total += pair_loss(encoder, p, margin, [None, None], None)?;
    }
    Ok(total / pairs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub seconds: f64,
    pub dev_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned, when early stopping picked one.
    pub best_epoch: Option<usize>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,mean_loss,seconds,dev_accuracy\n");
        for r in &self.epochs {
            let dev = r.dev_accuracy.map(|a| a.to_string()).unwrap_or_default();
            writeln!(s, "{},{},{:.3},{}", r.epoch, r.mean_loss, r.seconds, dev).unwrap();
        }
        s
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|r| r.mean_loss)
    }
}

/// Accuracy of the best cosine-similarity threshold on the binarized dev set.
pub fn dev_accuracy<T: Scalar>(model: &EncoderModel<T>, dev: &AnnotatedPairSet) -> Result<f64> {
    let labeled = binarize_annotations(dev);
    let mut scores = Vec::with_capacity(labeled.len());
    let mut labels = Vec::with_capacity(labeled.len());
    for p in &labeled.pairs {
        let a = model.encode_sentence(&p.a)?;
        let b = model.encode_sentence(&p.b)?;
        scores.push(1.0 - cosine_distance(&a, &b));
        labels.push(p.label);
    }
    best_threshold_accuracy(&scores, &labels).map(|(acc, _)| acc)
}

/// Trains a fresh encoder with a vocabulary built from `data`.
pub fn train<T: Scalar>(
    config: &TrainConfig,
    data: &LabeledPairSet,
    dev: Option<&AnnotatedPairSet>,
) -> Result<(EncoderModel<T>, TrainLog)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    let vocab = build_vocab(data.sentences(), config.min_count);
    train_with_vocab(config, vocab, data, dev)
}

pub fn train_with_vocab<T: Scalar>(
    config: &TrainConfig,
    vocab: Vocabulary,
    data: &LabeledPairSet,
    dev: Option<&AnnotatedPairSet>,
) -> Result<(EncoderModel<T>, TrainLog)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    if config.patience.is_some() && dev.is_none() {
        return Err(Error::InvalidArgument(
            "early stopping needs a dev set".into(),
        ));
    }
    let encoder = Encoder::<T>::init(
        config.encoder,
        vocab.len(),
        config.dim,
        config.gran_options(),
        config.seed,
    )?;
    let mut model = EncoderModel::new(vocab, encoder)?;
    model.max_len = DEFAULT_MAX_LEN;
    let pairs = encode_pairs(&model, data);

    let adam = config.adam();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut shuffle_rng = seeded_rng(config.seed.wrapping_add(1));
    let mut mask_rng = seeded_rng(config.seed.wrapping_add(2));
    let mut log = TrainLog::default();
    let mut best: Option<(f64, usize, crate::numcore::ParameterSet<T>)> = None;
    let mut stale = 0;

    for epoch in 1..=config.epochs {
        let start = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for (batch_index, chunk) in order.chunks(config.batch_size).enumerate() {
            let encoder = &model.encoder;
            let mut grads = encoder.params().zeros_like();
            let w = 1.0 / chunk.len() as f64;
            let mut batch_loss = 0.0;
            for &i in chunk {
                let ma = encoder.sample_masks(config.keep_prob, &mut mask_rng)?;
                let mb = encoder.sample_masks(config.keep_prob, &mut mask_rng)?;
                batch_loss += pair_loss(
                    encoder,
                    &pairs[i],
                    config.margin,
                    [ma.as_ref(), mb.as_ref()],
                    Some((&mut grads, w)),
                )?;
            }
            if !batch_loss.is_finite() || !grads.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_index,
                });
            }
            total += batch_loss;
            adam_step(model.encoder.params_mut(), &grads, &adam)?;
        }
        let mean_loss = total / pairs.len() as f64;
        let dev_acc = match dev {
            Some(d) => Some(dev_accuracy(&model, d)?),
            None => None,
        };
        log.epochs.push(EpochRecord {
            epoch,
            mean_loss,
            seconds: start.elapsed().as_secs_f64(),
            dev_accuracy: dev_acc,
        });
        log::info!(
            "epoch {epoch}: mean loss {mean_loss:.6}{}",
            match dev_acc {
                Some(a) => format!(", dev accuracy {a:.4}"),
                None => String::new(),
            }
        );

        if let (Some(patience), Some(acc)) = (config.patience, dev_acc) {
            if best.as_ref().map_or(true, |(b, _, _)| acc > *b) {
                best = Some((acc, epoch, model.encoder.params().clone()));
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    log::info!("no dev improvement for {patience} epochs, stopping");
                    break;
                }
            }
        }
    }

    if let Some((_, epoch, params)) = best {
        *model.encoder.params_mut() = params;
        log.best_epoch = Some(epoch);
    }
    Ok((model, log))
}
