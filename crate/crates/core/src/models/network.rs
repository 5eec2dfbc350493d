use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use crate::ctc::LogitSequence;
use crate::dataio::{Batch, BatchInput, InputKind};
use crate::error::{Error, Result};
use crate::nncore::{Layer, Mode, Scalar, Tensor};

/// A recognizer mapping a batch to one logit sequence per sample.
pub trait Network<T: Scalar>: Layer<T> + Send {
    fn config(&self) -> &ModelConfig;

    /// One `[T_padded, V + 1]` logit sequence per sample; rows past each
    /// sample's input length are zero. Train mode caches for `backward` and
    /// applies dropout.
    fn forward(&mut self, batch: &Batch, mode: Mode, rng: &mut ChaCha8Rng) -> Result<Vec<LogitSequence<T>>>;

    /// Backpropagates per-sample logit gradients from the last train-mode
    /// `forward`, accumulating into parameter gradients.
    fn backward(&mut self, grads: &[Tensor<T>]) -> Result<()>;

    fn clear_cache(&mut self);
}

pub fn model_forward<T: Scalar>(
    model: &mut dyn Network<T>,
    batch: &Batch,
    mode: Mode,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<LogitSequence<T>>> {
    model.forward(batch, mode, rng)
}

/// Trainable scalar count.
pub fn parameter_count<T: Scalar>(model: &dyn Network<T>) -> usize {
    model.params().iter().filter(|p| p.trainable).map(|p| p.value.len()).sum()
}

pub(crate) fn check_batch(config: &ModelConfig, batch: &Batch) -> Result<()> {
    let kind = batch.input.kind();
    if kind != config.input_kind() {
        return Err(Error::Input(format!(
            "{:?} expects {:?} inputs, batch holds {:?}",
            config.architecture,
            config.input_kind(),
            kind
        )));
    }
    if batch.input.side() != config.input_side() {
        return Err(Error::Input(format!(
            "model expects {0}x{0} images, batch holds {1}x{1}",
            config.input_side(),
            batch.input.side()
        )));
    }
    if batch.is_empty() || batch.input_lengths.iter().any(|&l| l == 0 || l > batch.max_frames()) {
        return Err(Error::Input("batch has an empty sample or inconsistent lengths".into()));
    }
    Ok(())
}

pub(crate) fn offsets(lengths: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(lengths.len() + 1);
    out.push(0);
    for &l in lengths {
        out.push(out.last().unwrap() + l);
    }
    out
}

/// Valid frames of `[B, T, S, S]` stacked as `[N, 1, S, S]`.
pub(crate) fn gather_frames<T: Scalar>(images: &Tensor<f32>, lengths: &[usize]) -> Tensor<T> {
    let (t, s) = (images.dim(1), images.dim(2));
    let px = s * s;
    let n: usize = lengths.iter().sum();
    let mut out = Vec::with_capacity(n * px);
    for (i, &len) in lengths.iter().enumerate() {
        let src = &images.data()[i * t * px..][..len * px];
        out.extend(src.iter().map(|&v| T::from_f32(v)));
    }
    Tensor::from_vec(&[n, 1, s, s], out).expect("gathered frame count matches")
}

/// Valid rows of sample `i` in `[B, T, D]` as `[len, D]`.
pub(crate) fn gather_rows<T: Scalar>(x: &Tensor<f32>, i: usize, len: usize) -> Tensor<T> {
    let (t, d) = (x.dim(1), x.dim(2));
    let src = &x.data()[i * t * d..][..len * d];
    Tensor::from_vec(&[len, d], src.iter().map(|&v| T::from_f32(v)).collect()).expect("row count matches")
}

/// Splits `[N, C]` into per-sample logits zero-padded to `t_pad` rows.
pub(crate) fn split_logits<T: Scalar>(
    all: &Tensor<T>,
    lengths: &[usize],
    t_pad: usize,
) -> Result<Vec<LogitSequence<T>>> {
    let c = all.dim(1);
    let off = offsets(lengths);
    lengths
        .iter()
        .enumerate()
        .map(|(i, &len)| {
            let mut scores = Tensor::zeros(&[t_pad, c]);
            scores.data_mut()[..len * c].copy_from_slice(&all.data()[off[i] * c..off[i + 1] * c]);
            LogitSequence::new(scores, len)
        })
        .collect()
}

/// Inverse of [`split_logits`] for gradients.
pub(crate) fn join_grads<T: Scalar>(grads: &[Tensor<T>], lengths: &[usize]) -> Result<Tensor<T>> {
    if grads.len() != lengths.len() {
        return Err(Error::Dimension(format!(
            "{} logit gradients for a batch of {}",
            grads.len(),
            lengths.len()
        )));
    }
    let c = grads.first().map_or(0, |g| g.dim(1));
    let n: usize = lengths.iter().sum();
    let mut out = Vec::with_capacity(n * c);
    for (g, &len) in grads.iter().zip(lengths) {
        if g.shape().len() != 2 || g.dim(1) != c || g.dim(0) < len {
            return Err(Error::Dimension(format!("logit gradient shape {:?}", g.shape())));
        }
        out.extend_from_slice(&g.data()[..len * c]);
    }
    Tensor::from_vec(&[n, c], out)
}

pub(crate) fn frames_of(batch: &Batch) -> &Tensor<f32> {
    match &batch.input {
        BatchInput::Frames { frames, .. } => frames,
        BatchInput::Cues { .. } => unreachable!("checked by check_batch"),
    }
}

pub(crate) fn expect_kind(config: &ModelConfig, kind: InputKind) -> Result<()> {
    if config.input_kind() != kind {
        return Err(Error::ConfigMismatch(format!(
            "config describes {:?}, not a {:?} network",
            config.architecture,
            kind
        )));
    }
    config.validate()
}
