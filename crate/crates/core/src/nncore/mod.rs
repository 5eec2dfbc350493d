//! Dense tensors, the layer set used by both recognizers, and Adam.
//!
//! Layers cache what their backward pass needs during `forward`; `infer`
//! variants run without caching. Every layer is generic over [`Scalar`] so
//! the same code trains in `f32` and is gradient-checked in `f64`.

mod activation;
mod adam;
mod conv;
mod dense;
mod dropout;
mod gradcheck;
mod lstm;
mod norm;
mod param;
mod pool;
mod scalar;
mod tensor;

pub use activation::{log_softmax_row, softmax_time_distributed, Relu};
pub use adam::{adam_step, Adam, TrainConfig};
pub use conv::{conv2d, Conv2d, Padding};
pub use dense::{dense, Dense};
pub use dropout::{dropout, Dropout};
pub use gradcheck::finite_diff_check;
pub use lstm::{bilstm_seq, lstm_seq, BiLstm, Lstm};
pub use norm::{batch_norm, BatchNorm, BN_EPSILON, BN_MOMENTUM};
pub use param::{glorot_uniform, Param};
pub use pool::{max_pool2d, MaxPool2d};
pub use scalar::Scalar;
pub use tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Anything that owns parameter tensors.
pub trait Layer<T: Scalar> {
    fn params(&self) -> Vec<&Param<T>>;
    fn params_mut(&mut self) -> Vec<&mut Param<T>>;

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Adds `λ·w` to the gradient of every decayed trainable tensor.
    fn add_weight_decay(&mut self, lambda: f64) {
        if lambda == 0.0 {
            return;
        }
        let l = T::from_f64(lambda);
        for p in self.params_mut() {
            if p.trainable && p.decay {
                let (value, grad) = (&p.value, &mut p.grad);
                for (g, &w) in grad.data_mut().iter_mut().zip(value.data()) {
                    *g += l * w;
                }
            }
        }
    }

    /// `(λ/2) Σ w²` over decayed tensors; its gradient is what `add_weight_decay` adds.
    fn weight_decay_penalty(&self, lambda: f64) -> f64 {
        0.5 * lambda
            * self
                .params()
                .iter()
                .filter(|p| p.trainable && p.decay)
                .map(|p| p.value.sq_norm())
                .sum::<f64>()
    }
}
