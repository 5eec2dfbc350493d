use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Scalar, Tensor};

/// A named parameter tensor with its gradient slot.
#[derive(Clone, Debug)]
pub struct Param<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
    pub trainable: bool,
    /// Whether L2 weight decay applies (weights yes, biases and norm shifts no).
    pub decay: bool,
}

impl<T: Scalar> Param<T> {
    pub fn new(name: impl Into<String>, value: Tensor<T>, decay: bool) -> Self {
        let grad = Tensor::zeros(value.shape());
        Param {
            name: name.into(),
            value,
            grad,
            trainable: true,
            decay,
        }
    }

    /// A non-trainable buffer such as a batch-norm running statistic.
    pub fn buffer(name: impl Into<String>, value: Tensor<T>) -> Self {
        let mut p = Self::new(name, value, false);
        p.trainable = false;
        p
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::zero());
    }
}

/// Glorot-uniform weights: U(±√(6/(fan_in+fan_out))).
pub fn glorot_uniform<T: Scalar>(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    rng: &mut ChaCha8Rng,
) -> Tensor<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let len: usize = shape.iter().product();
    let data = (0..len)
        .map(|_| T::from_f64(rng.random_range(-limit..limit)))
        .collect();
    Tensor::from_vec(shape, data).expect("shape and data agree")
}
