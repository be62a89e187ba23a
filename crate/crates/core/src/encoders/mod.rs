//! Sentence encoders: word averaging and the gated recurrent averaging
//! network, with hand-derived backward passes.

mod gran;
mod wa;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Sentence, Vocabulary};
use crate::error::{Error, Result};
use crate::numcore::{Gradients, ParameterSet};
use crate::scalar::Scalar;

pub use gran::{
    hidden_limit, parameter_shapes as gran_parameter_shapes, GranCache, GranEncoder, GranMasks,
    GranOptions, GranStep,
};
pub use wa::WaEncoder;

/// Parameter names, in checkpoint order.
pub mod names {
    pub const EMBEDDING: &str = "embedding";
    pub const W_R: &str = "w_r";
    pub const W_Z: &str = "w_z";
    pub const W_H: &str = "w_h";
    pub const U_R: &str = "u_r";
    pub const U_Z: &str = "u_z";
    pub const U_H: &str = "u_h";
    pub const B_H: &str = "b_h";
    pub const W_X: &str = "w_x";
    pub const W_G: &str = "w_g";
    pub const B: &str = "b";
    pub const B_R: &str = "b_r";
    pub const B_Z: &str = "b_z";
}

pub const DEFAULT_DIM: usize = 300;
pub const DEFAULT_HIDDEN: usize = 300;
pub const DEFAULT_MAX_LEN: usize = 512;

pub(crate) fn check_ids(ids: &[u32], vocab_size: usize) -> Result<()> {
    if ids.is_empty() {
        return Err(Error::EmptySequence);
    }
    if let Some(&bad) = ids.iter().find(|&&id| id as usize >= vocab_size) {
        return Err(Error::InvalidArgument(format!(
            "token id {bad} outside vocabulary of {vocab_size}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    Wa,
    Gran,
}

impl EncoderKind {
    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::Wa => "wa",
            EncoderKind::Gran => "gran",
        }
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wa" => Ok(EncoderKind::Wa),
            "gran" => Ok(EncoderKind::Gran),
            _ => Err(Error::InvalidArgument(format!(
                "unknown encoder `{s}` (wa or gran)"
            ))),
        }
    }
}

/// Activations saved by a forward pass for the matching backward pass.
#[derive(Debug, Clone, PartialEq)]
pub enum ForwardCache<T> {
    Wa { ids: Vec<u32> },
    Gran(GranCache<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Encoder<T> {
    Wa(WaEncoder<T>),
    Gran(GranEncoder<T>),
}

impl<T: Scalar> Encoder<T> {
    pub fn init(
        kind: EncoderKind,
        vocab_size: usize,
        dim: usize,
        gran: GranOptions,
        seed: u64,
    ) -> Result<Self> {
        Ok(match kind {
            EncoderKind::Wa => Encoder::Wa(WaEncoder::init(vocab_size, dim, seed)?),
            EncoderKind::Gran => Encoder::Gran(GranEncoder::init(vocab_size, dim, gran, seed)?),
        })
    }

    pub fn from_params(
        kind: EncoderKind,
        params: ParameterSet<T>,
        gran: GranOptions,
    ) -> Result<Self> {
        Ok(match kind {
            EncoderKind::Wa => Encoder::Wa(WaEncoder::from_params(params)?),
            EncoderKind::Gran => Encoder::Gran(GranEncoder::from_params(params, gran)?),
        })
    }

    pub fn kind(&self) -> EncoderKind {
        match self {
            Encoder::Wa(_) => EncoderKind::Wa,
            Encoder::Gran(_) => EncoderKind::Gran,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Encoder::Wa(e) => e.dim(),
            Encoder::Gran(e) => e.dim(),
        }
    }

    /// Hidden size of the recurrent cell; zero for word averaging.
    pub fn hidden(&self) -> usize {
        match self {
            Encoder::Wa(_) => 0,
            Encoder::Gran(e) => e.hidden(),
        }
    }

    pub fn vocab_size(&self) -> usize {
        match self {
            Encoder::Wa(e) => e.vocab_size(),
            Encoder::Gran(e) => e.vocab_size(),
        }
    }

    pub fn gran_options(&self) -> Option<&GranOptions> {
        match self {
            Encoder::Wa(_) => None,
            Encoder::Gran(e) => Some(e.options()),
        }
    }

    pub fn params(&self) -> &ParameterSet<T> {
        match self {
            Encoder::Wa(e) => e.params(),
            Encoder::Gran(e) => e.params(),
        }
    }

    pub fn params_mut(&mut self) -> &mut ParameterSet<T> {
        match self {
            Encoder::Wa(e) => e.params_mut(),
            Encoder::Gran(e) => e.params_mut(),
        }
    }

    /// Inference embedding (no dropout).
    pub fn encode(&self, ids: &[u32]) -> Result<Vec<T>> {
        match self {
            Encoder::Wa(e) => e.encode(ids),
            Encoder::Gran(e) => e.encode(ids, None),
        }
    }

    /// Forward pass that keeps what [`Encoder::backward`] needs. Masks only
    /// affect the recurrent encoder.
    pub fn forward(
        &self,
        ids: &[u32],
        masks: Option<&GranMasks<T>>,
    ) -> Result<(Vec<T>, ForwardCache<T>)> {
        match self {
            Encoder::Wa(e) => e.forward(ids),
            Encoder::Gran(e) => e.forward(ids, masks),
        }
    }

    /// Samples the per-sequence dropout masks used in training, if any.
    pub fn sample_masks<R: Rng>(
        &self,
        keep_prob: f64,
        rng: &mut R,
    ) -> Result<Option<GranMasks<T>>> {
        match self {
            Encoder::Gran(e) if keep_prob < 1.0 => Ok(Some(GranMasks::sample(
                e.dim(),
                e.hidden(),
                keep_prob,
                rng,
            )?)),
            _ => Ok(None),
        }
    }

    /// Accumulates `d loss / d params` into `grads`, given `grad_out = d loss / d embedding`.
    pub fn backward(
        &self,
        cache: &ForwardCache<T>,
        grad_out: &[T],
        grads: &mut Gradients<T>,
    ) -> Result<()> {
        if grad_out.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "output gradient has {} entries, encoder dimension is {}",
                grad_out.len(),
                self.dim()
            )));
        }
        match (self, cache) {
            (Encoder::Wa(e), ForwardCache::Wa { ids }) => e.backward(ids, grad_out, grads),
            (Encoder::Gran(e), ForwardCache::Gran(c)) => e.backward(c, grad_out, grads),
            (Encoder::Wa(_), _) => Err(Error::CacheMismatch("wa")),
            (Encoder::Gran(_), _) => Err(Error::CacheMismatch("gran")),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Encoder<U> {
        let params = self.params().cast::<U>();
        match self {
            Encoder::Wa(_) => Encoder::Wa(WaEncoder::from_params(params).expect("same shapes")),
            Encoder::Gran(e) => {
                Encoder::Gran(GranEncoder::from_params(params, *e.options()).expect("same shapes"))
            }
        }
    }
}

/// Anything that maps a sentence to a fixed-size vector.
pub trait SentenceEncoder: Sync {
    fn dim(&self) -> usize;
    fn embed(&self, sentence: &Sentence) -> Result<Vec<f32>>;
}

/// A trained encoder together with its vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel<T> {
    pub vocab: Vocabulary,
    pub encoder: Encoder<T>,
    pub max_len: usize,
}

impl<T: Scalar> EncoderModel<T> {
    pub fn new(vocab: Vocabulary, encoder: Encoder<T>) -> Result<Self> {
        if vocab.len() != encoder.vocab_size() {
            return Err(Error::InvalidArgument(format!(
                "vocabulary has {} ids but the embedding matrix has {} rows",
                vocab.len(),
                encoder.vocab_size()
            )));
        }
        Ok(EncoderModel {
            vocab,
            encoder,
            max_len: DEFAULT_MAX_LEN,
        })
    }

    pub fn kind(&self) -> EncoderKind {
        self.encoder.kind()
    }

    /// Token ids, truncated to `max_len`.
    pub fn token_ids(&self, sentence: &Sentence) -> Vec<u32> {
        let mut ids = self.vocab.encode(sentence);
        if ids.len() > self.max_len {
            log::warn!(
                "truncating a {}-token sentence to {} tokens",
                ids.len(),
                self.max_len
            );
            ids.truncate(self.max_len);
        }
        ids
    }

    pub fn encode_sentence(&self, sentence: &Sentence) -> Result<Vec<T>> {
        self.encoder.encode(&self.token_ids(sentence))
    }
}

impl<T: Scalar> SentenceEncoder for EncoderModel<T> {
    fn dim(&self) -> usize {
        self.encoder.dim()
    }

    fn embed(&self, sentence: &Sentence) -> Result<Vec<f32>> {
        Ok(self
            .encode_sentence(sentence)?
            .into_iter()
            .map(|x| x.widen() as f32)
            .collect())
    }
}
