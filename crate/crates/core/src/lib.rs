//! Paraphrastic sentence encoders: word averaging and a gated recurrent
//! averaging network, with contrastive training, unsupervised morphological
//! segmentation and evaluation tools.
//!
//! Numerical code is generic over [`Scalar`]; the aliases below fix the
//! precision.

pub mod corpus;
pub mod encoders;
pub mod error;
pub mod evaluate;
pub mod morphseg;
pub mod numcore;
pub mod scalar;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix32 = numcore::Matrix<f32>;
pub type Matrix64 = numcore::Matrix<f64>;
pub type ParameterSet32 = numcore::ParameterSet<f32>;
pub type ParameterSet64 = numcore::ParameterSet<f64>;
pub type Encoder32 = encoders::Encoder<f32>;
pub type Encoder64 = encoders::Encoder<f64>;
pub type WaEncoder32 = encoders::WaEncoder<f32>;
pub type WaEncoder64 = encoders::WaEncoder<f64>;
pub type GranEncoder32 = encoders::GranEncoder<f32>;
pub type GranEncoder64 = encoders::GranEncoder<f64>;
/// Precision of stored checkpoints.
pub type EncoderModel32 = encoders::EncoderModel<f32>;
pub type EncoderModel64 = encoders::EncoderModel<f64>;
