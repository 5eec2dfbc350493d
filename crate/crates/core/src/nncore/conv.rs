use rand_chacha::ChaCha8Rng;

use super::scalar::{matmul, matmul_at, matmul_bt};
use super::{glorot_uniform, Layer, Param, Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    Same,
    Valid,
}

/// 2-D cross-correlation over a stack of images `[N, C_in, H, W]`.
#[derive(Clone, Debug)]
pub struct Conv2d<T> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    in_channels: usize,
    out_channels: usize,
    kernel: usize,
    stride: usize,
    padding: Padding,
    /// The first layer of a network does not need its input gradient.
    pub input_grad: bool,
    cache: Option<Tensor<T>>,
}

struct Geometry {
    h: usize,
    w: usize,
    out_h: usize,
    out_w: usize,
    pad_top: usize,
    pad_left: usize,
}

fn out_extent(input: usize, kernel: usize, stride: usize, padding: Padding) -> Result<(usize, usize)> {
    match padding {
        Padding::Valid => {
            if kernel > input {
                return Err(Error::Dimension(format!(
                    "kernel extent {kernel} exceeds input extent {input}"
                )));
            }
            Ok(((input - kernel) / stride + 1, 0))
        }
        Padding::Same => {
            let out = input.div_ceil(stride);
            let total = ((out - 1) * stride + kernel).saturating_sub(input);
            Ok((out, total / 2))
        }
    }
}

impl<T: Scalar> Conv2d<T> {
    pub fn new(
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: Padding,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let fan_in = in_channels * kernel * kernel;
        let fan_out = out_channels * kernel * kernel;
        let weight = glorot_uniform(&[out_channels, in_channels, kernel, kernel], fan_in, fan_out, rng);
        Conv2d {
            weight: Param::new(format!("{name}.weight"), weight, true),
            bias: Param::new(format!("{name}.bias"), Tensor::zeros(&[out_channels]), false),
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            input_grad: true,
            cache: None,
        }
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    /// Output spatial extents for an `h × w` input.
    pub fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let g = self.geometry(h, w)?;
        Ok((g.out_h, g.out_w))
    }

    fn geometry(&self, h: usize, w: usize) -> Result<Geometry> {
        let (out_h, pad_top) = out_extent(h, self.kernel, self.stride, self.padding)?;
        let (out_w, pad_left) = out_extent(w, self.kernel, self.stride, self.padding)?;
        Ok(Geometry {
            h,
            w,
            out_h,
            out_w,
            pad_top,
            pad_left,
        })
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<Geometry> {
        let s = x.shape();
        if s.len() != 4 || s[1] != self.in_channels {
            return Err(Error::Dimension(format!(
                "conv2d expects [N, {}, H, W], got {:?}",
                self.in_channels, s
            )));
        }
        self.geometry(s[2], s[3])
    }

    /// Fills `col` (`[C·k·k, out_h·out_w]`) from one image.
    fn im2col(&self, img: &[T], g: &Geometry, col: &mut [T]) {
        let k = self.kernel;
        let p = g.out_h * g.out_w;
        for c in 0..self.in_channels {
            let plane = &img[c * g.h * g.w..(c + 1) * g.h * g.w];
            for ky in 0..k {
                for kx in 0..k {
                    let row = &mut col[((c * k + ky) * k + kx) * p..][..p];
                    for oy in 0..g.out_h {
                        let iy = (oy * self.stride + ky) as isize - g.pad_top as isize;
                        let dst = &mut row[oy * g.out_w..(oy + 1) * g.out_w];
                        if iy < 0 || iy >= g.h as isize {
                            dst.iter_mut().for_each(|v| *v = T::zero());
                            continue;
                        }
                        let src = &plane[iy as usize * g.w..(iy as usize + 1) * g.w];
                        for (ox, d) in dst.iter_mut().enumerate() {
                            let ix = (ox * self.stride + kx) as isize - g.pad_left as isize;
                            *d = if ix < 0 || ix >= g.w as isize {
                                T::zero()
                            } else {
                                src[ix as usize]
                            };
                        }
                    }
                }
            }
        }
    }

    fn col2im(&self, col: &[T], g: &Geometry, img: &mut [T]) {
        let k = self.kernel;
        let p = g.out_h * g.out_w;
        for c in 0..self.in_channels {
            let plane = &mut img[c * g.h * g.w..(c + 1) * g.h * g.w];
            for ky in 0..k {
                for kx in 0..k {
                    let row = &col[((c * k + ky) * k + kx) * p..][..p];
                    for oy in 0..g.out_h {
                        let iy = (oy * self.stride + ky) as isize - g.pad_top as isize;
                        if iy < 0 || iy >= g.h as isize {
                            continue;
                        }
                        for ox in 0..g.out_w {
                            let ix = (ox * self.stride + kx) as isize - g.pad_left as isize;
                            if ix >= 0 && ix < g.w as isize {
                                plane[iy as usize * g.w + ix as usize] += row[oy * g.out_w + ox];
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let y = self.infer(x)?;
        self.cache = Some(x.clone());
        Ok(y)
    }

    /// Forward pass without caching activations.
    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let g = self.check_input(x)?;
        let n = x.dim(0);
        let ckk = self.in_channels * self.kernel * self.kernel;
        let p = g.out_h * g.out_w;
        let mut y = Tensor::zeros(&[n, self.out_channels, g.out_h, g.out_w]);
        let mut col = vec![T::zero(); ckk * p];
        let w = self.weight.value.data();
        let b = self.bias.value.data();
        for (img, out) in x.data().chunks(x.row_len()).zip(y.data_mut().chunks_mut(self.out_channels * p)) {
            self.im2col(img, &g, &mut col);
            for (oc, plane) in out.chunks_mut(p).enumerate() {
                plane.iter_mut().for_each(|v| *v = b[oc]);
            }
            matmul(self.out_channels, ckk, p, w, &col, T::one(), out);
        }
        Ok(y)
    }

    pub fn backward(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self
            .cache
            .take()
            .ok_or_else(|| Error::State("conv2d backward called before forward".into()))?;
        let g = self.check_input(&x)?;
        let n = x.dim(0);
        let ckk = self.in_channels * self.kernel * self.kernel;
        let p = g.out_h * g.out_w;
        if dy.shape() != [n, self.out_channels, g.out_h, g.out_w] {
            return Err(Error::Dimension(format!(
                "conv2d upstream gradient has shape {:?}",
                dy.shape()
            )));
        }
        let mut dx = Tensor::zeros(x.shape());
        let mut col = vec![T::zero(); ckk * p];
        let mut dcol = vec![T::zero(); ckk * p];
        for i in 0..n {
            let dy_i = dy.row(i);
            self.im2col(x.row(i), &g, &mut col);
            matmul_bt(self.out_channels, p, ckk, dy_i, &col, T::one(), self.weight.grad.data_mut());
            for (oc, plane) in dy_i.chunks(p).enumerate() {
                let s: T = plane.iter().copied().sum();
                self.bias.grad.data_mut()[oc] += s;
            }
            if self.input_grad {
                matmul_at(ckk, self.out_channels, p, self.weight.value.data(), dy_i, T::zero(), &mut dcol);
                self.col2im(&dcol, &g, dx.row_mut(i));
            }
        }
        Ok(dx)
    }
}

impl<T: Scalar> Layer<T> for Conv2d<T> {
    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.weight, &self.bias]
    }
    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// Single-image convolution `[C_in, H, W] -> [C_out, H', W']`.
pub fn conv2d<T: Scalar>(input: &Tensor<T>, layer: &Conv2d<T>) -> Result<Tensor<T>> {
    let s = input.shape();
    if s.len() != 3 {
        return Err(Error::Dimension(format!("conv2d expects [C, H, W], got {s:?}")));
    }
    let batched = input.clone().reshape(&[1, s[0], s[1], s[2]])?;
    let y = layer.infer(&batched)?;
    let ys = y.shape().to_vec();
    y.reshape(&ys[1..])
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;

    fn layer(c_in: usize, c_out: usize, k: usize, padding: Padding) -> Conv2d<f64> {
        Conv2d::new("c", c_in, c_out, k, 1, padding, &mut ChaCha8Rng::seed_from_u64(0))
    }

    #[test]
    fn one_by_one_kernel_scales() {
        let mut c = layer(1, 1, 1, Padding::Valid);
        c.weight.value.fill(2.0);
        let x = Tensor::from_vec(&[1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(conv2d(&x, &c).unwrap().data(), &[2.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn valid_all_ones() {
        let mut c = layer(1, 1, 2, Padding::Valid);
        c.weight.value.fill(1.0);
        let x = Tensor::full(&[1, 3, 3], 1.0);
        let y = conv2d(&x, &c).unwrap();
        assert_eq!(y.shape(), &[1, 2, 2]);
        assert_eq!(y.data(), &[4.0; 4]);
    }

    #[test]
    fn same_padding_shape() {
        let c = layer(1, 8, 3, Padding::Same);
        let y = conv2d(&Tensor::zeros(&[1, 32, 32]), &c).unwrap();
        assert_eq!(y.shape(), &[8, 32, 32]);
    }

    #[test]
    fn strided_same_shape() {
        let c: Conv2d<f32> =
            Conv2d::new("c", 2, 4, 3, 2, Padding::Same, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(c.output_hw(9, 8).unwrap(), (5, 4));
    }

    #[test]
    fn kernel_larger_than_input_is_dimension_error() {
        let c = layer(1, 1, 5, Padding::Valid);
        let err = conv2d(&Tensor::zeros(&[1, 3, 3]), &c).unwrap_err();
        assert!(matches!(err, Error::Dimension(m) if m.contains('5') && m.contains('3')));
    }

    #[test]
    fn wrong_channel_count() {
        let c = layer(2, 1, 1, Padding::Valid);
        assert!(conv2d(&Tensor::zeros(&[1, 3, 3]), &c).is_err());
    }

    #[test]
    fn backward_before_forward() {
        let mut c = layer(1, 1, 1, Padding::Valid);
        assert!(matches!(
            c.backward(&Tensor::zeros(&[1, 1, 1, 1])),
            Err(Error::State(_))
        ));
    }
}
