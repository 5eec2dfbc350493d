use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Architecture, ModelConfig};
use super::{build_model, Network};
use crate::ctc::GlossVocabulary;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"MCSC";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorMeta {
    pub name: String,
    pub shape: Vec<usize>,
}

/// Position of the training RNG, enough to resume the exact stream.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: String,
    pub stream: u64,
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        RngState {
            seed: rng.get_seed().iter().map(|b| format!("{b:02x}")).collect(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng> {
        let bad = || Error::Format("malformed rng state".into());
        if self.seed.len() != 64 {
            return Err(bad());
        }
        let mut seed = [0u8; 32];
        for (i, b) in seed.iter_mut().enumerate() {
            *b = u8::from_str_radix(&self.seed[2 * i..2 * i + 2], 16).map_err(|_| bad())?;
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos.parse().map_err(|_| bad())?);
        Ok(rng)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config: ModelConfig,
    pub vocabulary: GlossVocabulary,
    pub tensors: Vec<TensorMeta>,
    pub step: u64,
    pub rng: RngState,
}

/// A restored model plus the training state stored alongside it.
pub struct Checkpoint {
    pub model: Box<dyn Network<f32>>,
    pub vocabulary: GlossVocabulary,
    pub step: u64,
    pub rng: ChaCha8Rng,
}

pub fn encode_checkpoint(
    model: &dyn Network<f32>,
    vocabulary: &GlossVocabulary,
    step: u64,
    rng: &ChaCha8Rng,
) -> Result<Vec<u8>> {
    if model.config().vocab_size != vocabulary.len() {
        return Err(Error::VocabularyMismatch(format!(
            "model predicts {} glosses, vocabulary has {}",
            model.config().vocab_size,
            vocabulary.len()
        )));
    }
    let params = model.params();
    let meta = CheckpointMeta {
        config: model.config().clone(),
        vocabulary: vocabulary.clone(),
        tensors: params
            .iter()
            .map(|p| TensorMeta {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
            })
            .collect(),
        step,
        rng: RngState::capture(rng),
    };
    let json = serde_json::to_vec(&meta).expect("checkpoint metadata serializes");
    let payload: usize = params.iter().map(|p| p.value.len()).sum();
    let mut out = Vec::with_capacity(16 + json.len() + 4 * payload);
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for p in params {
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::Truncated(format!("{what}: need {n} bytes, {} left", bytes.len())));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

/// Reads only the header and metadata.
pub fn decode_checkpoint_meta(bytes: &[u8]) -> Result<(CheckpointMeta, usize)> {
    let mut rest = bytes;
    let magic = take(&mut rest, 4, "magic")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = u32::from_le_bytes(take(&mut rest, 4, "version")?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let len = u64::from_le_bytes(take(&mut rest, 8, "metadata length")?.try_into().unwrap());
    let len = usize::try_from(len).map_err(|_| Error::Format("metadata length overflows".into()))?;
    let json = take(&mut rest, len, "metadata")?;
    let meta: CheckpointMeta =
        serde_json::from_slice(json).map_err(|e| Error::Format(format!("metadata: {e}")))?;
    Ok((meta, 16 + len))
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let (meta, offset) = decode_checkpoint_meta(bytes)?;
    let mut model = build_model::<f32>(&meta.config, 0).map_err(|e| Error::ConfigMismatch(e.to_string()))?;
    if meta.vocabulary.len() != meta.config.vocab_size {
        return Err(Error::ConfigMismatch(format!(
            "config has {} glosses, vocabulary {}",
            meta.config.vocab_size,
            meta.vocabulary.len()
        )));
    }
    let mut rest = &bytes[offset..];
    {
        let mut params = model.params_mut();
        if params.len() != meta.tensors.len() {
            return Err(Error::ConfigMismatch(format!(
                "config builds {} tensors, checkpoint lists {}",
                params.len(),
                meta.tensors.len()
            )));
        }
        for (p, t) in params.iter_mut().zip(&meta.tensors) {
            if p.name != t.name || p.value.shape() != t.shape.as_slice() {
                return Err(Error::ConfigMismatch(format!(
                    "tensor {} {:?} does not match {} {:?}",
                    t.name,
                    t.shape,
                    p.name,
                    p.value.shape()
                )));
            }
            let raw = take(&mut rest, 4 * p.value.len(), &t.name)?;
            for (v, b) in p.value.data_mut().iter_mut().zip(raw.chunks_exact(4)) {
                *v = f32::from_le_bytes(b.try_into().unwrap());
            }
        }
    }
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes after parameters", rest.len())));
    }
    Ok(Checkpoint {
        model,
        vocabulary: meta.vocabulary,
        step: meta.step,
        rng: meta.rng.restore()?,
    })
}

pub fn save_checkpoint(
    path: &Path,
    model: &dyn Network<f32>,
    vocabulary: &GlossVocabulary,
    step: u64,
    rng: &ChaCha8Rng,
) -> Result<()> {
    let bytes = encode_checkpoint(model, vocabulary, step, rng)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

/// Loads a checkpoint that must hold the given architecture.
pub fn load_checkpoint_as(path: &Path, architecture: Architecture) -> Result<Checkpoint> {
    let ckpt = load_checkpoint(path)?;
    if ckpt.model.config().architecture != architecture {
        return Err(Error::ConfigMismatch(format!(
            "checkpoint holds {:?}, expected {:?}",
            ckpt.model.config().architecture,
            architecture
        )));
    }
    Ok(ckpt)
}
