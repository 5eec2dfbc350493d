use rand_chacha::ChaCha8Rng;

use super::cnn::FrameCnn;
use super::config::ModelConfig;
use super::network::{check_batch, expect_kind, frames_of, gather_frames, join_grads, offsets, split_logits, Network};
use crate::ctc::LogitSequence;
use crate::dataio::{Batch, InputKind};
use crate::error::{Error, Result};
use crate::nncore::{Dense, Dropout, Layer, Lstm, Mode, Param, Relu, Scalar, Tensor};

/// Per-frame CNN, dense layers, a unidirectional LSTM over time, and a
/// time-distributed output layer over `V + 1` classes.
#[derive(Clone, Debug)]
pub struct RSignC<T> {
    config: ModelConfig,
    cnn: FrameCnn<T>,
    dense: Vec<Dense<T>>,
    relus: Vec<Relu>,
    lstm: Lstm<T>,
    dropout: Dropout,
    output: Dense<T>,
    lengths: Vec<usize>,
}

pub fn build_rsign_c<T: Scalar>(config: &ModelConfig, rng: &mut ChaCha8Rng) -> Result<RSignC<T>> {
    expect_kind(config, InputKind::Frames)?;
    let cnn = FrameCnn::new("cnn", config, rng)?;
    let mut width = cnn.features();
    let mut dense = Vec::new();
    for (i, &w) in config.dense.iter().enumerate() {
        dense.push(Dense::new(&format!("dense{i}"), width, w, rng));
        width = w;
    }
    let lstm = Lstm::new("lstm", width, config.frame_lstm, rng);
    let output = Dense::new("output", config.frame_lstm, config.num_classes(), rng);
    Ok(RSignC {
        config: config.clone(),
        cnn,
        relus: vec![Relu::new(); dense.len()],
        dense,
        lstm,
        dropout: Dropout::new(config.dropout)?,
        output,
        lengths: Vec::new(),
    })
}

impl<T: Scalar> Network<T> for RSignC<T> {
    fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn forward(&mut self, batch: &Batch, mode: Mode, rng: &mut ChaCha8Rng) -> Result<Vec<LogitSequence<T>>> {
        check_batch(&self.config, batch)?;
        let lengths = &batch.input_lengths;
        let train = mode == Mode::Train;
        let mut h = self.cnn.forward(&gather_frames(frames_of(batch), lengths), mode)?;
        for (d, r) in self.dense.iter_mut().zip(&mut self.relus) {
            h = if train { d.forward(&h)? } else { d.infer(&h)? };
            h = r.forward(&h);
        }
        let off = offsets(lengths);
        let mut seqs = Vec::with_capacity(lengths.len());
        for i in 0..lengths.len() {
            let x = h.slice_rows(off[i], off[i + 1]);
            seqs.push(if train { self.lstm.forward(&x)? } else { self.lstm.infer(&x)? });
        }
        let mut z = Tensor::concat_rows(&seqs)?;
        let logits = if train {
            z = self.dropout.forward(&z, mode, rng);
            self.output.forward(&z)?
        } else {
            self.output.infer(&z)?
        };
        self.lengths = lengths.clone();
        split_logits(&logits, lengths, batch.max_frames())
    }

    fn backward(&mut self, grads: &[Tensor<T>]) -> Result<()> {
        let lengths = std::mem::take(&mut self.lengths);
        if lengths.is_empty() {
            return Err(Error::State("backward called before a train-mode forward".into()));
        }
        let d = self.output.backward(&join_grads(grads, &lengths)?)?;
        let d = self.dropout.backward(&d)?;
        let off = offsets(&lengths);
        let mut parts = vec![Tensor::zeros(&[0]); lengths.len()];
        for i in (0..lengths.len()).rev() {
            parts[i] = self.lstm.backward(&d.slice_rows(off[i], off[i + 1]))?;
        }
        let mut g = Tensor::concat_rows(&parts)?;
        for (d, r) in self.dense.iter_mut().zip(&mut self.relus).rev() {
            g = r.backward(&g)?;
            g = d.backward(&g)?;
        }
        self.cnn.backward(&g)
    }

    fn clear_cache(&mut self) {
        self.dense.iter_mut().for_each(Dense::clear_cache);
        self.lstm.clear_cache();
        self.dropout.clear_cache();
        self.output.clear_cache();
        self.lengths.clear();
    }
}

impl<T: Scalar> Layer<T> for RSignC<T> {
    fn params(&self) -> Vec<&Param<T>> {
        let mut p = self.cnn.params();
        for d in &self.dense {
            p.extend(d.params());
        }
        p.extend(self.lstm.params());
        p.extend(self.output.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut p = self.cnn.params_mut();
        for d in &mut self.dense {
            p.extend(d.params_mut());
        }
        p.extend(self.lstm.params_mut());
        p.extend(self.output.params_mut());
        p
    }
}
