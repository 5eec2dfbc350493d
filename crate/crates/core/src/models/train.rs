use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Network;
use crate::ctc::{ctc_loss, GlossVocabulary};
use crate::dataio::{batch_order, make_batch, Batch, LoadedSample};
use crate::error::{Error, Result};
use crate::evalkit::evaluate_model;
use crate::nncore::{Adam, Mode, Tensor, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean per-sample CTC loss over the epoch.
    pub train_loss: f64,
    /// `train_loss` plus the L2 penalty, averaged over steps.
    pub objective: f64,
    pub dev_wer: Option<f64>,
    pub steps: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_dev_wer: Option<f64>,
    /// Samples dropped because their targets cannot fit their frame count.
    pub skipped: Vec<String>,
}

pub struct FitOutcome {
    pub log: TrainingLog,
    pub step: u64,
    pub rng: ChaCha8Rng,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepStats {
    /// Mean CTC loss over the batch.
    pub loss: f64,
    pub penalty: f64,
    pub grad_norm: f64,
}

/// One Adam update on `batch` minimizing mean CTC loss plus L2.
pub fn train_step(
    model: &mut dyn Network<f32>,
    optimizer: &mut Adam<f32>,
    batch: &Batch,
    config: &TrainConfig,
    step: u64,
    rng: &mut ChaCha8Rng,
) -> Result<StepStats> {
    model.zero_grad();
    let logits = model.forward(batch, Mode::Train, rng)?;
    let scale = 1.0 / batch.len() as f32;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(batch.len());
    for (i, l) in logits.iter().enumerate() {
        let r = ctc_loss(l, &batch.target(i))?;
        loss += r.loss;
        let mut g: Tensor<f32> = r.grad;
        g.data_mut().iter_mut().for_each(|v| *v *= scale);
        grads.push(g);
    }
    model.backward(&grads)?;
    let l2 = model.config().l2;
    let penalty = model.weight_decay_penalty(l2);
    model.add_weight_decay(l2);
    let grad_norm = optimizer.step(&mut model.params_mut(), config, step);
    Ok(StepStats {
        loss: loss / batch.len() as f64,
        penalty,
        grad_norm,
    })
}

fn snapshot(model: &dyn Network<f32>) -> Vec<Vec<f32>> {
    model.params().iter().map(|p| p.value.data().to_vec()).collect()
}

fn restore(model: &mut dyn Network<f32>, values: &[Vec<f32>]) {
    for (p, v) in model.params_mut().into_iter().zip(values) {
        p.value.data_mut().copy_from_slice(v);
    }
}

/// Trains with Adam, evaluating dev WER after every epoch; the model is left
/// holding the parameters of the best dev epoch (the latest one on ties).
pub fn fit(
    model: &mut dyn Network<f32>,
    train: &[LoadedSample],
    dev: &[LoadedSample],
    vocab: &GlossVocabulary,
    config: &TrainConfig,
) -> Result<FitOutcome> {
    config.validate()?;
    let mut skipped = Vec::new();
    let feasible: Vec<&LoadedSample> = train
        .iter()
        .filter(|s| {
            let ok = s.target.min_frames() <= s.input.len();
            if !ok {
                log::warn!(
                    "skipping {}: {} glosses need {} frames, sample has {}",
                    s.id,
                    s.target.len(),
                    s.target.min_frames(),
                    s.input.len()
                );
                skipped.push(s.id.clone());
            }
            ok
        })
        .collect();
    if feasible.is_empty() {
        return Err(Error::NoFeasibleSamples);
    }
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5EED_D80F);
    let mut optimizer = Adam::new();
    let mut step = 0u64;
    let mut epochs = Vec::new();
    let mut best: Option<(f64, usize, Vec<Vec<f32>>)> = None;
    for epoch in 1..=config.max_epochs {
        let epoch_start = Instant::now();
        let order = batch_order(feasible.len(), config.batch_size, Some(config.seed.wrapping_add(epoch as u64)))?;
        let (mut loss_sum, mut objective_sum, mut samples) = (0.0, 0.0, 0usize);
        for group in &order {
            let refs: Vec<&LoadedSample> = group.iter().map(|&i| feasible[i]).collect();
            let batch = make_batch(&refs, 0)?;
            step += 1;
            let stats = train_step(model, &mut optimizer, &batch, config, step, &mut rng)?;
            loss_sum += stats.loss * batch.len() as f64;
            objective_sum += (stats.loss + stats.penalty) * batch.len() as f64;
            samples += batch.len();
        }
        let dev_wer = if dev.is_empty() {
            None
        } else {
            Some(evaluate_model(model, dev, vocab, "dev", config.eval_beam, 1)?.wer_percent)
        };
        let entry = EpochLog {
            epoch,
            train_loss: loss_sum / samples as f64,
            objective: objective_sum / samples as f64,
            dev_wer,
            steps: step,
        };
        log::info!(
            "epoch {epoch}: loss {:.4} dev WER {} ({:.0}s)",
            entry.train_loss,
            dev_wer.map_or("-".into(), |w| format!("{w:.1}")),
            started.elapsed().as_secs_f64()
        );
        epochs.push(entry);
        let score = dev_wer.unwrap_or(f64::INFINITY);
        if best.as_ref().is_none_or(|(b, _, _)| score <= *b) || dev_wer.is_none() {
            best = Some((score, epoch, snapshot(model)));
        }
        // stop when another epoch of the same length would overrun the budget
        let projected = started.elapsed().as_secs_f64() + epoch_start.elapsed().as_secs_f64();
        if config.time_budget_secs > 0.0 && epoch < config.max_epochs && projected > config.time_budget_secs {
            log::warn!("time budget reached after epoch {epoch}");
            break;
        }
    }
    let (best_epoch, best_dev_wer) = match best {
        Some((score, epoch, values)) => {
            restore(model, &values);
            (epoch, score.is_finite().then_some(score))
        }
        None => (0, None),
    };
    model.clear_cache();
    Ok(FitOutcome {
        log: TrainingLog {
            epochs,
            best_epoch,
            best_dev_wer,
            skipped,
        },
        step,
        rng,
    })
}
