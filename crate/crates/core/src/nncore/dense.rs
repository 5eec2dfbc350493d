use rand_chacha::ChaCha8Rng;

use super::scalar::{matmul, matmul_at, matmul_bt};
use super::{glorot_uniform, Layer, Param, Scalar, Tensor};
use crate::error::{Error, Result};

/// Fully connected layer `y = W x + b` applied to every row of `[B, N]`.
#[derive(Clone, Debug)]
pub struct Dense<T> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    inputs: usize,
    outputs: usize,
    cache: Vec<Tensor<T>>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(name: &str, inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        Dense {
            weight: Param::new(
                format!("{name}.weight"),
                glorot_uniform(&[outputs, inputs], inputs, outputs, rng),
                true,
            ),
            bias: Param::new(format!("{name}.bias"), Tensor::zeros(&[outputs]), false),
            inputs,
            outputs,
            cache: Vec::new(),
        }
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let s = x.shape();
        if s.len() != 2 || s[1] != self.inputs {
            return Err(Error::Dimension(format!(
                "dense expects [B, {}], got {:?}",
                self.inputs, s
            )));
        }
        let rows = s[0];
        let mut y = Tensor::zeros(&[rows, self.outputs]);
        for r in 0..rows {
            y.row_mut(r).copy_from_slice(self.bias.value.data());
        }
        matmul_bt(rows, self.inputs, self.outputs, x.data(), self.weight.value.data(), T::one(), y.data_mut());
        Ok(y)
    }

    /// Forward pass; each call pushes one cache entry consumed by `backward`
    /// in reverse order.
    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let y = self.infer(x)?;
        self.cache.push(x.clone());
        Ok(y)
    }

    pub fn backward(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self
            .cache
            .pop()
            .ok_or_else(|| Error::State("dense backward called before forward".into()))?;
        let rows = x.dim(0);
        if dy.shape() != [rows, self.outputs] {
            return Err(Error::Dimension(format!(
                "dense upstream gradient {:?}, expected [{rows}, {}]",
                dy.shape(),
                self.outputs
            )));
        }
        matmul_at(self.outputs, rows, self.inputs, dy.data(), x.data(), T::one(), self.weight.grad.data_mut());
        for r in 0..rows {
            for (b, &g) in self.bias.grad.data_mut().iter_mut().zip(dy.row(r)) {
                *b += g;
            }
        }
        let mut dx = Tensor::zeros(&[rows, self.inputs]);
        matmul(rows, self.outputs, self.inputs, dy.data(), self.weight.value.data(), T::zero(), dx.data_mut());
        Ok(dx)
    }

    pub fn clear_cache(&mut self) {
        self.cache.clear();
    }
}

impl<T: Scalar> Layer<T> for Dense<T> {
    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.weight, &self.bias]
    }
    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// Single-vector dense map `[N] -> [M]`.
pub fn dense<T: Scalar>(input: &Tensor<T>, layer: &Dense<T>) -> Result<Tensor<T>> {
    let n = input.len();
    let y = layer.infer(&input.clone().reshape(&[1, n])?)?;
    let m = y.len();
    y.reshape(&[m])
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;

    fn layer(w: Vec<f64>, b: Vec<f64>, n: usize, m: usize) -> Dense<f64> {
        let mut d = Dense::new("d", n, m, &mut ChaCha8Rng::seed_from_u64(1));
        d.weight.value = Tensor::from_vec(&[m, n], w).unwrap();
        d.bias.value = Tensor::from_vec(&[m], b).unwrap();
        d
    }

    #[test]
    fn identity_weight() {
        let d = layer(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0], 2, 2);
        let x = Tensor::from_vec(&[2], vec![-3.5, 2.0]).unwrap();
        assert_eq!(dense(&x, &d).unwrap().data(), x.data());
    }

    #[test]
    fn zero_weight_gives_bias() {
        let d = layer(vec![0.0; 6], vec![1.0, -2.0], 3, 2);
        let x = Tensor::from_vec(&[3], vec![5.0, 6.0, 7.0]).unwrap();
        assert_eq!(dense(&x, &d).unwrap().data(), &[1.0, -2.0]);
    }

    #[test]
    fn hand_multiply() {
        let d = layer(vec![1.0, 2.0, 3.0, 4.0], vec![0.0, 0.0], 2, 2);
        let x = Tensor::from_vec(&[2], vec![1.0, 1.0]).unwrap();
        assert_eq!(dense(&x, &d).unwrap().data(), &[3.0, 7.0]);
    }

    #[test]
    fn mismatched_input() {
        let d = layer(vec![0.0; 4], vec![0.0; 2], 2, 2);
        assert!(matches!(dense(&Tensor::zeros(&[3]), &d), Err(Error::Dimension(_))));
    }

    #[test]
    fn sum_loss_identity_gives_ones() {
        let mut d = layer(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0], 2, 2);
        d.forward(&Tensor::from_vec(&[1, 2], vec![0.3, -0.7]).unwrap()).unwrap();
        let dx = d.backward(&Tensor::full(&[1, 2], 1.0)).unwrap();
        assert_eq!(dx.data(), &[1.0, 1.0]);
    }

    #[test]
    fn zero_upstream_zero_grads() {
        let mut d = layer(vec![0.5, -1.0, 2.0, 0.1], vec![0.2, 0.3], 2, 2);
        d.forward(&Tensor::from_vec(&[1, 2], vec![0.3, -0.7]).unwrap()).unwrap();
        let dx = d.backward(&Tensor::zeros(&[1, 2])).unwrap();
        assert!(dx.data().iter().all(|&v| v == 0.0));
        assert!(d.weight.grad.data().iter().all(|&v| v == 0.0));
        assert!(d.bias.grad.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_before_forward() {
        let mut d = layer(vec![0.0; 4], vec![0.0; 2], 2, 2);
        assert!(matches!(d.backward(&Tensor::zeros(&[1, 2])), Err(Error::State(_))));
    }
}
