use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Mode, Scalar, Tensor};
use crate::error::{Error, Result};

/// Inverted dropout: survivors are scaled by `1 / (1 - rate)` at train time so
/// inference is the identity.
#[derive(Clone, Debug)]
pub struct Dropout {
    rate: f64,
    masks: Vec<Option<Vec<f64>>>,
}

impl Dropout {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
        }
        Ok(Dropout {
            rate,
            masks: Vec::new(),
        })
    }

    pub fn forward<T: Scalar>(&mut self, x: &Tensor<T>, mode: Mode, rng: &mut ChaCha8Rng) -> Tensor<T> {
        if mode == Mode::Infer || self.rate == 0.0 {
            self.masks.push(None);
            return x.clone();
        }
        let keep = 1.0 / (1.0 - self.rate);
        let mask: Vec<f64> = (0..x.len())
            .map(|_| if rng.random::<f64>() < self.rate { 0.0 } else { keep })
            .collect();
        let mut y = x.clone();
        for (v, &m) in y.data_mut().iter_mut().zip(&mask) {
            *v *= T::from_f64(m);
        }
        self.masks.push(Some(mask));
        y
    }

    pub fn backward<T: Scalar>(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let mask = self
            .masks
            .pop()
            .ok_or_else(|| Error::State("dropout backward called before forward".into()))?;
        let mut dx = dy.clone();
        if let Some(mask) = mask {
            for (v, &m) in dx.data_mut().iter_mut().zip(&mask) {
                *v *= T::from_f64(m);
            }
        }
        Ok(dx)
    }

    pub fn clear_cache(&mut self) {
        self.masks.clear();
    }
}

pub fn dropout<T: Scalar>(input: &Tensor<T>, rate: f64, mode: Mode, rng: &mut ChaCha8Rng) -> Result<Tensor<T>> {
    Ok(Dropout::new(rate)?.forward(input, mode, rng))
}
