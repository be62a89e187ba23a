//! Binary checkpoint format.
//!
//! ```text
//! "PARA1" | version u32 | kind u8 | d u32 | hidden u32 | |V| u32
//! |V| x (len u32, utf-8 bytes)            vocabulary, id order, id 0 = <unk>
//! parameter matrices, row-major f32      fixed order per encoder kind
//! len u32, json                          training configuration
//! crc32 u32                              over every preceding byte
//! ```
//!
//! All integers and floats are little-endian. Kind is 0 for word averaging,
//! 1 for the recurrent encoder and 2 for the recurrent encoder with gate biases.

use std::path::Path;

use super::TrainConfig;
use crate::corpus::{Vocabulary, UNKNOWN_TOKEN};
use crate::encoders::{
    gran_parameter_shapes, names, Encoder, EncoderKind, EncoderModel, GranOptions,
};
use crate::error::{Error, Result};
use crate::numcore::{Matrix, ParameterSet};
use crate::scalar::Scalar;

pub const CHECKPOINT_MAGIC: &[u8; 5] = b"PARA1";
pub const CHECKPOINT_VERSION: u32 = 1;

const HEADER_LEN: usize = 5 + 4 + 1 + 4 + 4 + 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: EncoderModel<f32>,
    pub config: TrainConfig,
}

fn kind_byte<T: Scalar>(encoder: &Encoder<T>) -> u8 {
    match encoder.gran_options() {
        None => 0,
        Some(o) if o.gate_biases => 2,
        Some(_) => 1,
    }
}

fn put_u32(buf: &mut Vec<u8>, x: usize) -> Result<()> {
    let x = u32::try_from(x)
        .map_err(|_| Error::InvalidArgument(format!("{x} does not fit the checkpoint format")))?;
    buf.extend_from_slice(&x.to_le_bytes());
    Ok(())
}

/// Serializes a model; values are stored as 32-bit floats.
pub fn write_checkpoint<T: Scalar>(
    model: &EncoderModel<T>,
    config: &TrainConfig,
) -> Result<Vec<u8>> {
    let enc = &model.encoder;
    if config.encoder != enc.kind() || config.dim != enc.dim() {
        return Err(Error::InvalidArgument(
            "training configuration does not describe this model".into(),
        ));
    }
    if let Some(o) = enc.gran_options() {
        if config.hidden != o.hidden
            || config.gate_biases != o.gate_biases
            || config.activation != o.activation
        {
            return Err(Error::InvalidArgument(
                "training configuration does not describe this model".into(),
            ));
        }
    }
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * enc.params().parameter_count() + 64);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.push(kind_byte(enc));
    put_u32(&mut buf, enc.dim())?;
    put_u32(&mut buf, enc.hidden())?;
    put_u32(&mut buf, model.vocab.len())?;
    for id in 0..model.vocab.len() {
        let token = if id == 0 {
            UNKNOWN_TOKEN
        } else {
            model.vocab.token(id as u32).expect("dense ids")
        };
        put_u32(&mut buf, token.len())?;
        buf.extend_from_slice(token.as_bytes());
    }
    for (_, m) in enc.params().iter() {
        for &x in m.as_slice() {
            buf.extend_from_slice(&(x.widen() as f32).to_le_bytes());
        }
    }
    let json = serde_json::to_vec(config).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    put_u32(&mut buf, json.len())?;
    buf.extend_from_slice(&json);
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    Ok(buf)
}

pub fn save_checkpoint<T: Scalar>(
    model: &EncoderModel<T>,
    config: &TrainConfig,
    path: &Path,
) -> Result<()> {
    let bytes = write_checkpoint(model, config)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::Truncated)?;
        let s = self.data.get(self.pos..end).ok_or(Error::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix<f32>> {
        let n = rows.checked_mul(cols).ok_or(Error::Truncated)?;
        let bytes = self.take(n.checked_mul(4).ok_or(Error::Truncated)?)?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Matrix::from_vec(rows, cols, data)
    }
}

/// Parses from the start of `body`, returning the number of bytes used.
fn parse_body(body: &[u8]) -> Result<(Checkpoint, usize)> {
    let mut c = Cursor {
        data: body,
        pos: HEADER_LEN - 13,
    };
    let kind_code = c.u8()?;
    let d = c.u32()? as usize;
    let hidden = c.u32()? as usize;
    let v = c.u32()? as usize;
    let (kind, gate_biases) = match kind_code {
        0 => (EncoderKind::Wa, false),
        1 => (EncoderKind::Gran, false),
        2 => (EncoderKind::Gran, true),
        k => return Err(Error::Corrupt(format!("unknown encoder kind {k}"))),
    };
    if v == 0 || d == 0 {
        return Err(Error::Corrupt("empty model dimensions".into()));
    }
    let mut tokens = Vec::with_capacity(v.min(1 << 20));
    for _ in 0..v {
        let len = c.u32()? as usize;
        let s = std::str::from_utf8(c.take(len)?)
            .map_err(|_| Error::Corrupt("vocabulary is not UTF-8".into()))?;
        tokens.push(s.to_owned());
    }
    if tokens[0] != UNKNOWN_TOKEN {
        return Err(Error::Corrupt(
            "vocabulary does not start with the unknown token".into(),
        ));
    }
    let vocab = Vocabulary::from_known_tokens(tokens.into_iter().skip(1))
        .map_err(|e| Error::Corrupt(e.to_string()))?;

    let shapes = match kind {
        EncoderKind::Wa => vec![(names::EMBEDDING, (v, d))],
        EncoderKind::Gran => gran_parameter_shapes(
            v,
            d,
            &GranOptions {
                hidden,
                gate_biases,
                ..Default::default()
            },
        ),
    };
    let mut params = ParameterSet::new();
    for (name, (r, cols)) in shapes {
        params.insert(name, c.matrix(r, cols)?)?;
    }
    let json_len = c.u32()? as usize;
    let config: TrainConfig = serde_json::from_slice(c.take(json_len)?)
        .map_err(|e| Error::Corrupt(format!("configuration: {e}")))?;
    if config.encoder != kind
        || config.dim != d
        || (kind == EncoderKind::Gran && config.hidden != hidden)
    {
        return Err(Error::Corrupt(
            "configuration disagrees with the header".into(),
        ));
    }
    let options = GranOptions {
        hidden,
        activation: config.activation,
        gate_biases,
    };
    let encoder =
        Encoder::from_params(kind, params, options).map_err(|e| Error::Corrupt(e.to_string()))?;
    let model = EncoderModel::new(vocab, encoder).map_err(|e| Error::Corrupt(e.to_string()))?;
    Ok((Checkpoint { model, config }, c.pos))
}

/// Parses checkpoint bytes.
///
/// A file that ends before its declared contents reports [`Error::Truncated`];
/// any other damage reports [`Error::Checksum`].
pub fn read_checkpoint(data: &[u8]) -> Result<Checkpoint> {
    if data.len() < CHECKPOINT_MAGIC.len() {
        return Err(Error::Truncated);
    }
    if &data[..5] != CHECKPOINT_MAGIC {
        return Err(Error::BadMagic);
    }
    if data.len() < HEADER_LEN + 4 {
        return Err(Error::Truncated);
    }
    let version = u32::from_le_bytes(data[5..9].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let (body, tail) = data.split_at(data.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        // Distinguish a short file from damaged contents.
        return match parse_body(data) {
            Err(Error::Truncated) => Err(Error::Truncated),
            Ok((_, used)) if data.len() < used + 4 => Err(Error::Truncated),
            _ => Err(Error::Checksum { stored, computed }),
        };
    }
    let (ckpt, used) = parse_body(body)?;
    if used != body.len() {
        return Err(Error::Corrupt(format!(
            "{} unexpected trailing bytes",
            body.len() - used
        )));
    }
    Ok(ckpt)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&data)
}

/// Loads a checkpoint and checks it holds the expected encoder kind.
pub fn load_checkpoint_as(path: &Path, expected: EncoderKind) -> Result<Checkpoint> {
    let ckpt = load_checkpoint(path)?;
    let found = ckpt.model.kind();
    if found != expected {
        return Err(Error::KindMismatch {
            expected: expected.name(),
            found: found.name(),
        });
    }
    Ok(ckpt)
}
