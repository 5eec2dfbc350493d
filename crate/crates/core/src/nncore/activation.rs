use super::{Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct Relu {
    mask: Option<Vec<bool>>,
}

impl Relu {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward<T: Scalar>(&mut self, x: &Tensor<T>) -> Tensor<T> {
        let mut y = x.clone();
        let mut mask = Vec::with_capacity(x.len());
        for v in y.data_mut() {
            let keep = *v > T::zero();
            if !keep {
                *v = T::zero();
            }
            mask.push(keep);
        }
        self.mask = Some(mask);
        y
    }

    pub fn backward<T: Scalar>(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let mask = self
            .mask
            .take()
            .ok_or_else(|| Error::State("relu backward called before forward".into()))?;
        if mask.len() != dy.len() {
            return Err(Error::Dimension("relu upstream gradient shape".into()));
        }
        let mut dx = dy.clone();
        for (d, keep) in dx.data_mut().iter_mut().zip(mask) {
            if !keep {
                *d = T::zero();
            }
        }
        Ok(dx)
    }
}

pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Row-wise softmax of `[T, K]` scores with max subtraction.
pub fn softmax_time_distributed<T: Scalar>(logits: &Tensor<T>) -> Tensor<T> {
    let mut out = logits.clone();
    let k = *logits.shape().last().unwrap_or(&1);
    if k == 0 {
        return out;
    }
    for row in out.data_mut().chunks_mut(k) {
        softmax_in_place(row);
    }
    out
}

pub(crate) fn softmax_in_place<T: Scalar>(row: &mut [T]) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    row.iter_mut().for_each(|v| *v /= sum);
}

/// Row-wise log-softmax in f64.
pub fn log_softmax_row(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
    row.iter().map(|&v| v - lse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_row() {
        let p = softmax_time_distributed(&Tensor::full(&[2, 4], 3.0f64));
        assert!(p.data().iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn shift_invariance() {
        let a = softmax_time_distributed(&Tensor::from_vec(&[1, 2], vec![0.0f64, 1.7]).unwrap());
        let b = softmax_time_distributed(&Tensor::from_vec(&[1, 2], vec![100.0f64, 101.7]).unwrap());
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_quarter() {
        let p = softmax_time_distributed(&Tensor::from_vec(&[1, 2], vec![0.0f64, 3f64.ln()]).unwrap());
        assert!((p.data()[0] - 0.25).abs() < 1e-12);
        assert!((p.data()[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn large_logits_stay_finite() {
        let p = softmax_time_distributed(&Tensor::from_vec(&[1, 3], vec![1e4f32, -1e4, 0.0]).unwrap());
        assert!(p.all_finite());
        assert!((p.sum() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn relu_backward_masks() {
        let mut r = Relu::new();
        let x = Tensor::from_vec(&[3], vec![-1.0f64, 0.0, 2.0]).unwrap();
        assert_eq!(r.forward(&x).data(), &[0.0, 0.0, 2.0]);
        let dx = r.backward(&Tensor::full(&[3], 1.0)).unwrap();
        assert_eq!(dx.data(), &[0.0, 0.0, 1.0]);
    }
}
