use rand_chacha::ChaCha8Rng;

use super::cnn::FrameCnn;
use super::config::ModelConfig;
use super::network::{check_batch, expect_kind, gather_frames, gather_rows, join_grads, offsets, split_logits, Network};
use crate::ctc::LogitSequence;
use crate::dataio::{Batch, BatchInput, InputKind};
use crate::error::{Error, Result};
use crate::nncore::{BiLstm, Dense, Dropout, Layer, Lstm, Mode, Param, Scalar, Tensor};

/// Shape, movement, and location branches of one hand, fused by a BLSTM.
#[derive(Clone, Debug)]
struct HandBranch<T> {
    cnn: FrameCnn<T>,
    image: Lstm<T>,
    movement: Lstm<T>,
    location: Lstm<T>,
    fusion: BiLstm<T>,
}

impl<T: Scalar> HandBranch<T> {
    fn new(name: &str, config: &ModelConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let cnn = FrameCnn::new(&format!("{name}.cnn"), config, rng)?;
        let image = Lstm::new(&format!("{name}.image_lstm"), cnn.features(), config.image_lstm, rng);
        Ok(HandBranch {
            cnn,
            image,
            movement: Lstm::new(&format!("{name}.movement_lstm"), 2, config.movement_lstm, rng),
            location: Lstm::new(&format!("{name}.location_lstm"), 3, config.location_lstm, rng),
            fusion: BiLstm::new(&format!("{name}.fusion"), config.hand_concat_width(), config.hand_blstm, rng),
        })
    }

    fn widths(&self) -> [usize; 3] {
        [self.image.hidden(), self.movement.hidden(), self.location.hidden()]
    }

    fn clear_cache(&mut self) {
        self.image.clear_cache();
        self.movement.clear_cache();
        self.location.clear_cache();
        self.fusion.clear_cache();
    }
}

impl<T: Scalar> Layer<T> for HandBranch<T> {
    fn params(&self) -> Vec<&Param<T>> {
        let mut p = self.cnn.params();
        p.extend(self.image.params());
        p.extend(self.movement.params());
        p.extend(self.location.params());
        p.extend(self.fusion.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut p = self.cnn.params_mut();
        p.extend(self.image.params_mut());
        p.extend(self.movement.params_mut());
        p.extend(self.location.params_mut());
        p.extend(self.fusion.params_mut());
        p
    }
}

/// Multi-cue recognizer: per-hand branch fusion, cross-hand BLSTM, and a
/// time-distributed output layer over `V + 1` classes.
#[derive(Clone, Debug)]
pub struct McSignC<T> {
    config: ModelConfig,
    hands: [HandBranch<T>; 2],
    fused_dropout: Dropout,
    cross: BiLstm<T>,
    output_dropout: Dropout,
    output: Dense<T>,
    lengths: Vec<usize>,
}

pub fn build_mcsign_c<T: Scalar>(config: &ModelConfig, rng: &mut ChaCha8Rng) -> Result<McSignC<T>> {
    expect_kind(config, InputKind::Cues)?;
    let left = HandBranch::new("left", config, rng)?;
    let right = HandBranch::new("right", config, rng)?;
    let cross = BiLstm::new("cross", 4 * config.hand_blstm, config.cross_blstm, rng);
    let output = Dense::new("output", 2 * config.cross_blstm, config.num_classes(), rng);
    Ok(McSignC {
        config: config.clone(),
        hands: [left, right],
        fused_dropout: Dropout::new(config.dropout)?,
        cross,
        output_dropout: Dropout::new(config.dropout)?,
        output,
        lengths: Vec::new(),
    })
}

impl<T: Scalar> Network<T> for McSignC<T> {
    fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn forward(&mut self, batch: &Batch, mode: Mode, rng: &mut ChaCha8Rng) -> Result<Vec<LogitSequence<T>>> {
        check_batch(&self.config, batch)?;
        let BatchInput::Cues {
            images,
            displacement,
            location,
            ..
        } = &batch.input
        else {
            unreachable!("checked by check_batch")
        };
        let lengths = &batch.input_lengths;
        let train = mode == Mode::Train;
        let mut features = Vec::with_capacity(2);
        for (h, branch) in self.hands.iter_mut().enumerate() {
            features.push(branch.cnn.forward(&gather_frames(&images[h], lengths), mode)?);
        }
        let off = offsets(lengths);
        let mut seqs = Vec::with_capacity(lengths.len());
        for (i, &len) in lengths.iter().enumerate() {
            let mut fused = Vec::with_capacity(2);
            for (h, branch) in self.hands.iter_mut().enumerate() {
                let img = features[h].slice_rows(off[i], off[i + 1]);
                let mv = gather_rows::<T>(&displacement[h], i, len);
                let loc = gather_rows::<T>(&location[h], i, len);
                let out = if train {
                    let a = branch.image.forward(&img)?;
                    let b = branch.movement.forward(&mv)?;
                    let c = branch.location.forward(&loc)?;
                    branch.fusion.forward(&Tensor::concat_cols(&[&a, &b, &c])?)?
                } else {
                    let a = branch.image.infer(&img)?;
                    let b = branch.movement.infer(&mv)?;
                    let c = branch.location.infer(&loc)?;
                    branch.fusion.infer(&Tensor::concat_cols(&[&a, &b, &c])?)?
                };
                fused.push(out);
            }
            let both = Tensor::concat_cols(&[&fused[0], &fused[1]])?;
            seqs.push(if train {
                let both = self.fused_dropout.forward(&both, mode, rng);
                self.cross.forward(&both)?
            } else {
                self.cross.infer(&both)?
            });
        }
        let z = Tensor::concat_rows(&seqs)?;
        let logits = if train {
            let z = self.output_dropout.forward(&z, mode, rng);
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
        let d = self.output_dropout.backward(&d)?;
        let off = offsets(&lengths);
        let fused_width = self.cross.forward.weight_ih.value.dim(1) / 2;
        let mut image_grads: [Vec<Tensor<T>>; 2] = [Vec::new(), Vec::new()];
        for i in (0..lengths.len()).rev() {
            let dc = self.cross.backward(&d.slice_rows(off[i], off[i + 1]))?;
            let dc = self.fused_dropout.backward(&dc)?;
            let per_hand = dc.split_cols(&[fused_width, fused_width])?;
            for (h, branch) in self.hands.iter_mut().enumerate() {
                let dcat = branch.fusion.backward(&per_hand[h])?;
                let parts = dcat.split_cols(&branch.widths())?;
                image_grads[h].push(branch.image.backward(&parts[0])?);
                branch.movement.backward(&parts[1])?;
                branch.location.backward(&parts[2])?;
            }
        }
        for (h, branch) in self.hands.iter_mut().enumerate() {
            image_grads[h].reverse();
            branch.cnn.backward(&Tensor::concat_rows(&image_grads[h])?)?;
        }
        Ok(())
    }

    fn clear_cache(&mut self) {
        self.hands.iter_mut().for_each(HandBranch::clear_cache);
        self.fused_dropout.clear_cache();
        self.cross.clear_cache();
        self.output_dropout.clear_cache();
        self.output.clear_cache();
        self.lengths.clear();
    }
}

impl<T: Scalar> Layer<T> for McSignC<T> {
    fn params(&self) -> Vec<&Param<T>> {
        let mut p = self.hands[0].params();
        p.extend(self.hands[1].params());
        p.extend(self.cross.params());
        p.extend(self.output.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let [left, right] = &mut self.hands;
        let mut p = left.params_mut();
        p.extend(right.params_mut());
        p.extend(self.cross.params_mut());
        p.extend(self.output.params_mut());
        p
    }
}
