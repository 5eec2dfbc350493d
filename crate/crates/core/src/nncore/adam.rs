use serde::{Deserialize, Serialize};

use super::{Param, Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Global gradient-norm ceiling applied before each Adam update.
    pub clip_norm: f64,
    pub seed: u64,
    /// Beam width used for the per-epoch dev evaluation.
    pub eval_beam: usize,
    /// Wall-clock limit in seconds; training stops before an epoch that is
    /// projected to end past it. 0 disables.
    /// Runs cut short this way are not reproducible.
    pub time_budget_secs: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 8,
            max_epochs: 20,
            clip_norm: 5.0,
            seed: 7,
            eval_beam: 8,
            time_budget_secs: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("learning_rate", self.learning_rate),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("epsilon", self.epsilon),
            ("clip_norm", self.clip_norm),
            ("time_budget_secs", self.time_budget_secs),
        ];
        for (name, v) in rates {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a nonnegative finite number, got {v}")));
            }
        }
        if self.beta1 >= 1.0 || self.beta2 >= 1.0 {
            return Err(Error::Config("Adam betas must be < 1".into()));
        }
        if self.batch_size == 0 || self.eval_beam == 0 {
            return Err(Error::Config("batch_size and eval_beam must be >= 1".into()));
        }
        Ok(())
    }
}

/// Adam with bias correction and global-norm gradient clipping.
#[derive(Clone, Debug, Default)]
pub struct Adam<T> {
    first: Vec<Tensor<T>>,
    second: Vec<Tensor<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new() -> Self {
        Adam {
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    /// Applies one update. `step_index` starts at 1. Returns the gradient norm
    /// measured before clipping.
    pub fn step(&mut self, params: &mut [&mut Param<T>], config: &TrainConfig, step_index: u64) -> f64 {
        let trainable: Vec<usize> = (0..params.len()).filter(|&i| params[i].trainable).collect();
        if self.first.is_empty() {
            for &i in &trainable {
                self.first.push(Tensor::zeros(params[i].value.shape()));
                self.second.push(Tensor::zeros(params[i].value.shape()));
            }
        }
        assert_eq!(self.first.len(), trainable.len(), "parameter set changed between Adam steps");

        let norm = trainable
            .iter()
            .map(|&i| params[i].grad.sq_norm())
            .sum::<f64>()
            .sqrt();
        let scale = if config.clip_norm > 0.0 && norm > config.clip_norm {
            config.clip_norm / norm
        } else {
            1.0
        };

        let t = step_index.max(1) as i32;
        let b1 = config.beta1;
        let b2 = config.beta2;
        let lr_t = config.learning_rate * (1.0 - b2.powi(t)).sqrt() / (1.0 - b1.powi(t));
        let (b1, b2, scale) = (T::from_f64(b1), T::from_f64(b2), T::from_f64(scale));
        let (lr_t, eps) = (T::from_f64(lr_t), T::from_f64(config.epsilon));
        for (slot, &i) in trainable.iter().enumerate() {
            let p = &mut *params[i];
            let m = self.first[slot].data_mut();
            let v = self.second[slot].data_mut();
            for (((w, &g), m), v) in p.value.data_mut().iter_mut().zip(p.grad.data()).zip(m).zip(v) {
                let g = g * scale;
                *m = b1 * *m + (T::one() - b1) * g;
                *v = b2 * *v + (T::one() - b2) * g * g;
                *w -= lr_t * *m / (v.sqrt() + eps);
            }
        }
        norm
    }
}

pub fn adam_step<T: Scalar>(
    optimizer: &mut Adam<T>,
    params: &mut [&mut Param<T>],
    config: &TrainConfig,
    step_index: u64,
) -> f64 {
    optimizer.step(params, config, step_index)
}
