use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Max pooling over `[N, C, H, W]`, valid windows only.
#[derive(Clone, Debug)]
pub struct MaxPool2d {
    window: usize,
    stride: usize,
    cache: Option<PoolCache>,
}

#[derive(Clone, Debug)]
struct PoolCache {
    input_shape: Vec<usize>,
    argmax: Vec<u32>,
}

impl MaxPool2d {
    pub fn new(window: usize, stride: usize) -> Self {
        MaxPool2d {
            window,
            stride,
            cache: None,
        }
    }

    pub fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        if self.window > h || self.window > w {
            return Err(Error::Dimension(format!(
                "pool window {} larger than input {}x{}",
                self.window, h, w
            )));
        }
        Ok(((h - self.window) / self.stride + 1, (w - self.window) / self.stride + 1))
    }

    pub fn forward<T: Scalar>(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let s = x.shape();
        if s.len() != 4 {
            return Err(Error::Dimension(format!("max pool expects [N, C, H, W], got {s:?}")));
        }
        let (n, c, h, w) = (s[0], s[1], s[2], s[3]);
        let (oh, ow) = self.output_hw(h, w)?;
        if n * c * h * w > u32::MAX as usize {
            return Err(Error::Dimension("max pool input too large".into()));
        }
        let mut out = Vec::with_capacity(n * c * oh * ow);
        let mut argmax = Vec::with_capacity(n * c * oh * ow);
        let src = x.data();
        let (k, st) = (self.window, self.stride);
        for plane in 0..n * c {
            let base = plane * h * w;
            for oy in 0..oh {
                let row0 = base + oy * st * w;
                for ox in 0..ow {
                    let mut best = row0 + ox * st;
                    let mut bv = src[best];
                    for ky in 0..k {
                        let r = row0 + ky * w + ox * st;
                        for (kx, &v) in src[r..r + k].iter().enumerate() {
                            if v > bv {
                                bv = v;
                                best = r + kx;
                            }
                        }
                    }
                    out.push(bv);
                    argmax.push(best as u32);
                }
            }
        }
        let y = Tensor::from_vec(&[n, c, oh, ow], out)?;
        self.cache = Some(PoolCache {
            input_shape: s.to_vec(),
            argmax,
        });
        Ok(y)
    }

    pub fn backward<T: Scalar>(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::State("max pool backward called before forward".into()))?;
        if dy.len() != cache.argmax.len() {
            return Err(Error::Dimension("max pool upstream gradient shape".into()));
        }
        let mut dx = Tensor::zeros(&cache.input_shape);
        let d = dx.data_mut();
        for (&g, &i) in dy.data().iter().zip(&cache.argmax) {
            d[i as usize] += g;
        }
        Ok(dx)
    }
}

/// Single-image max pooling `[C, H, W]`.
pub fn max_pool2d<T: Scalar>(input: &Tensor<T>, window: usize, stride: usize) -> Result<Tensor<T>> {
    let s = input.shape().to_vec();
    if s.len() != 3 {
        return Err(Error::Dimension(format!("max pool expects [C, H, W], got {s:?}")));
    }
    let y = MaxPool2d::new(window, stride).forward(&input.clone().reshape(&[1, s[0], s[1], s[2]])?)?;
    let ys = y.shape().to_vec();
    y.reshape(&ys[1..])
}
