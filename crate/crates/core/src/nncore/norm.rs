use super::{Layer, Mode, Param, Scalar, Tensor};
use crate::error::{Error, Result};

pub const BN_MOMENTUM: f64 = 0.9;
pub const BN_EPSILON: f64 = 1e-5;

/// Per-channel batch normalization over `[N, C, ...]`.
///
/// Statistics are taken over every axis except the channel axis. Running
/// statistics follow `running = momentum * running + (1 - momentum) * batch`.
#[derive(Clone, Debug)]
pub struct BatchNorm<T> {
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Param<T>,
    pub running_var: Param<T>,
    channels: usize,
    cache: Option<BnCache<T>>,
}

#[derive(Clone, Debug)]
struct BnCache<T> {
    xhat: Tensor<T>,
    inv_std: Vec<T>,
    mode: Mode,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(name: &str, channels: usize) -> Self {
        BatchNorm {
            gamma: Param::new(format!("{name}.gamma"), Tensor::full(&[channels], T::one()), false),
            beta: Param::new(format!("{name}.beta"), Tensor::zeros(&[channels]), false),
            running_mean: Param::buffer(format!("{name}.running_mean"), Tensor::zeros(&[channels])),
            running_var: Param::buffer(
                format!("{name}.running_var"),
                Tensor::full(&[channels], T::one()),
            ),
            channels,
            cache: None,
        }
    }

    fn layout(&self, x: &Tensor<T>) -> Result<(usize, usize)> {
        let s = x.shape();
        if s.len() < 2 || s[1] != self.channels {
            return Err(Error::Dimension(format!(
                "batch norm expects [N, {}, ...], got {:?}",
                self.channels, s
            )));
        }
        Ok((s[0], s[2..].iter().product()))
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let (n, inner) = self.layout(x)?;
        let c = self.channels;
        let eps = T::from_f64(BN_EPSILON);
        let (mean, var) = match mode {
            Mode::Train => {
                let count = T::from_f64((n * inner) as f64);
                let mut mean = vec![T::zero(); c];
                let mut var = vec![T::zero(); c];
                for img in x.data().chunks(c * inner) {
                    for (ch, plane) in img.chunks(inner).enumerate() {
                        mean[ch] += plane.iter().copied().sum::<T>();
                    }
                }
                mean.iter_mut().for_each(|m| *m /= count);
                for img in x.data().chunks(c * inner) {
                    for (ch, plane) in img.chunks(inner).enumerate() {
                        var[ch] += plane.iter().map(|&v| (v - mean[ch]) * (v - mean[ch])).sum::<T>();
                    }
                }
                var.iter_mut().for_each(|v| *v /= count);
                let mom = T::from_f64(BN_MOMENTUM);
                let rm = self.running_mean.value.data_mut();
                for ch in 0..c {
                    rm[ch] = mom * rm[ch] + (T::one() - mom) * mean[ch];
                }
                let rv = self.running_var.value.data_mut();
                for ch in 0..c {
                    rv[ch] = mom * rv[ch] + (T::one() - mom) * var[ch];
                }
                (mean, var)
            }
            Mode::Infer => (
                self.running_mean.value.data().to_vec(),
                self.running_var.value.data().to_vec(),
            ),
        };
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let gamma = self.gamma.value.data();
        let beta = self.beta.value.data();
        let mut xhat = x.clone();
        let mut y = x.clone();
        for (xi, yi) in xhat.data_mut().chunks_mut(c * inner).zip(y.data_mut().chunks_mut(c * inner)) {
            for ch in 0..c {
                let xs = &mut xi[ch * inner..(ch + 1) * inner];
                let ys = &mut yi[ch * inner..(ch + 1) * inner];
                let (mu, is, ga, be) = (mean[ch], inv_std[ch], gamma[ch], beta[ch]);
                for (a, b) in xs.iter_mut().zip(ys.iter_mut()) {
                    *a = (*a - mu) * is;
                    *b = ga * *a + be;
                }
            }
        }
        self.cache = Some(BnCache { xhat, inv_std, mode });
        Ok(y)
    }

    pub fn backward(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::State("batch norm backward called before forward".into()))?;
        if dy.shape() != cache.xhat.shape() {
            return Err(Error::Dimension("batch norm upstream gradient shape".into()));
        }
        let (n, inner) = self.layout(dy)?;
        let c = self.channels;
        let mut sum_dy = vec![T::zero(); c];
        let mut sum_dy_xhat = vec![T::zero(); c];
        for (di, xi) in dy.data().chunks(c * inner).zip(cache.xhat.data().chunks(c * inner)) {
            for ch in 0..c {
                let d = &di[ch * inner..(ch + 1) * inner];
                let xh = &xi[ch * inner..(ch + 1) * inner];
                for (&a, &b) in d.iter().zip(xh) {
                    sum_dy[ch] += a;
                    sum_dy_xhat[ch] += a * b;
                }
            }
        }
        for ch in 0..c {
            self.gamma.grad.data_mut()[ch] += sum_dy_xhat[ch];
            self.beta.grad.data_mut()[ch] += sum_dy[ch];
        }
        let gamma = self.gamma.value.data();
        let m = T::from_f64((n * inner) as f64);
        let mut dx = dy.clone();
        for (dxi, xi) in dx.data_mut().chunks_mut(c * inner).zip(cache.xhat.data().chunks(c * inner)) {
            for ch in 0..c {
                let g = gamma[ch] * cache.inv_std[ch];
                let d = &mut dxi[ch * inner..(ch + 1) * inner];
                let xh = &xi[ch * inner..(ch + 1) * inner];
                match cache.mode {
                    Mode::Train => {
                        let shift = g * sum_dy[ch] / m;
                        let slope = g * sum_dy_xhat[ch] / m;
                        for (a, &b) in d.iter_mut().zip(xh) {
                            *a = g * *a - shift - slope * b;
                        }
                    }
                    Mode::Infer => d.iter_mut().for_each(|a| *a *= g),
                }
            }
        }
        Ok(dx)
    }
}

impl<T: Scalar> Layer<T> for BatchNorm<T> {
    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.gamma, &self.beta, &self.running_mean, &self.running_var]
    }
    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![
            &mut self.gamma,
            &mut self.beta,
            &mut self.running_mean,
            &mut self.running_var,
        ]
    }
}

/// Functional batch norm: normalizes with `layer`'s parameters in the given mode.
pub fn batch_norm<T: Scalar>(input: &Tensor<T>, layer: &mut BatchNorm<T>, mode: Mode) -> Result<Tensor<T>> {
    layer.forward(input, mode)
}
