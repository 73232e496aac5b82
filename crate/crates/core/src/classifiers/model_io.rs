//! Binary model files.
//!
//! Layout: the 8-byte magic `RUAGMDL\0`, a little-endian `u16` format
//! version, then a postcard-encoded payload tagged with the model kind.
//! Floats are stored as raw IEEE-754 bits, so save/load is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ir::IrParts;
use super::{BowLrModel, IntentClassifier, IrModel, NgramModel, RandomGuess};

pub const MAGIC: &[u8; 8] = b"RUAGMDL\0";
pub const FORMAT_VERSION: u16 = 1;

/// Upper bound on embedding width accepted from a file.
const MAX_DIM: usize = 1 << 16;
/// Larger magnitudes can overflow the logits; training never gets near this.
const MAX_PARAM: f64 = 1e6;

#[derive(Debug, thiserror::Error)]
pub enum ModelIoError {
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u16),
    #[error("corrupt model payload: {0}")]
    Decode(#[from] postcard::Error),
    #[error("{0} trailing bytes after model payload")]
    TrailingBytes(usize),
    #[error("inconsistent model: {0}")]
    Inconsistent(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    BowLr(BowLrModel),
    Ngram(NgramModel),
    Ir(IrModel),
    Random(RandomGuess),
}

#[derive(Serialize, Deserialize)]
enum Payload {
    BowLr(BowLrModel),
    Ngram(NgramModel),
    Ir(IrParts),
    Random(RandomGuess),
}

impl SavedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            SavedModel::BowLr(_) => "bowlr",
            SavedModel::Ngram(_) => "ngram",
            SavedModel::Ir(_) => "ir",
            SavedModel::Random(_) => "random",
        }
    }

    pub fn classifier(&self) -> &dyn IntentClassifier {
        match self {
            SavedModel::BowLr(m) => m,
            SavedModel::Ngram(m) => m,
            SavedModel::Ir(m) => m,
            SavedModel::Random(m) => m,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, ModelIoError> {
        let payload = match self {
            SavedModel::BowLr(m) => postcard::to_stdvec(&Payload::BowLr(m.clone())),
            SavedModel::Ngram(m) => postcard::to_stdvec(&Payload::Ngram(m.clone())),
            SavedModel::Ir(m) => postcard::to_stdvec(&Payload::Ir(m.parts())),
            SavedModel::Random(m) => postcard::to_stdvec(&Payload::Random(m.clone())),
        }?;
        let mut out = Vec::with_capacity(payload.len() + 10);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelIoError> {
        if bytes.len() < 10 || &bytes[..8] != MAGIC {
            return Err(ModelIoError::BadMagic);
        }
        let version = u16::from_le_bytes([bytes[8], bytes[9]]);
        if version != FORMAT_VERSION {
            return Err(ModelIoError::UnsupportedVersion(version));
        }
        let (payload, rest): (Payload, _) = postcard::take_from_bytes(&bytes[10..])?;
        if !rest.is_empty() {
            return Err(ModelIoError::TrailingBytes(rest.len()));
        }
        let model = match payload {
            Payload::BowLr(m) => {
                check_bowlr(&m)?;
                SavedModel::BowLr(m)
            }
            Payload::Ngram(m) => {
                check_ngram(&m)?;
                SavedModel::Ngram(m)
            }
            Payload::Ir(p) => {
                if p.texts.len() != p.labels.len() || p.texts.is_empty() || !p.vocab.is_consistent() {
                    return Err(ModelIoError::Inconsistent("ir texts, labels and vocabulary disagree"));
                }
                SavedModel::Ir(IrModel::from_parts(p))
            }
            Payload::Random(m) => {
                RandomGuess::new(m.distribution, m.seed)
                    .map_err(|_| ModelIoError::Inconsistent("invalid label distribution"))?;
                SavedModel::Random(m)
            }
        };
        Ok(model)
    }
}

fn bounded(v: &[f64]) -> bool {
    v.iter().all(|x| x.abs() <= MAX_PARAM)
}

fn check_bowlr(m: &BowLrModel) -> Result<(), ModelIoError> {
    if !m.vocab.is_consistent() || m.weights.len() != 3 * m.vocab.len() {
        return Err(ModelIoError::Inconsistent("bowlr weights do not match vocabulary"));
    }
    if !bounded(&m.weights) || !bounded(&m.biases) || m.params.batch_size == 0 {
        return Err(ModelIoError::Inconsistent("bowlr parameters"));
    }
    Ok(())
}

fn check_ngram(m: &NgramModel) -> Result<(), ModelIoError> {
    let p = &m.params;
    if p.dim == 0 || p.dim > MAX_DIM || p.buckets == 0 || p.ngram_max == 0 || m.head.len() != 3 * p.dim {
        return Err(ModelIoError::Inconsistent("ngram shape"));
    }
    let rows_ok = m.embeddings.iter().all(|(&b, r)| b < p.buckets && r.len() == p.dim && bounded(r));
    if !rows_ok || !bounded(&m.head) || !bounded(&m.biases) {
        return Err(ModelIoError::Inconsistent("ngram embeddings"));
    }
    Ok(())
}

pub fn save_model(model: &SavedModel, path: &Path) -> Result<(), ModelIoError> {
    fs::write(path, model.to_bytes()?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SavedModel, ModelIoError> {
    SavedModel::from_bytes(&fs::read(path)?)
}
