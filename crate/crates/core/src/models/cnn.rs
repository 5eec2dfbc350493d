use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use crate::error::Result;
use crate::nncore::{BatchNorm, Conv2d, Layer, MaxPool2d, Mode, Padding, Param, Relu, Scalar, Tensor};

#[derive(Clone, Debug)]
struct Block<T> {
    conv: Conv2d<T>,
    norm: BatchNorm<T>,
    relu: Relu,
    pool: Option<MaxPool2d>,
}

/// Time-distributed convolution stack: `[N, 1, S, S] -> [N, F]`, applied to
/// every valid frame of a batch at once.
#[derive(Clone, Debug)]
pub struct FrameCnn<T> {
    blocks: Vec<Block<T>>,
    out_channels: usize,
    out_side: usize,
    features: usize,
}

impl<T: Scalar> FrameCnn<T> {
    pub fn new(name: &str, config: &ModelConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut blocks = Vec::new();
        let mut channels = 1;
        for (i, spec) in config.conv.iter().enumerate() {
            let mut conv = Conv2d::new(
                &format!("{name}.conv{i}"),
                channels,
                spec.channels,
                spec.kernel,
                1,
                Padding::Same,
                rng,
            );
            conv.input_grad = i > 0;
            blocks.push(Block {
                conv,
                norm: BatchNorm::new(&format!("{name}.bn{i}"), spec.channels),
                relu: Relu::new(),
                pool: (spec.pool > 1).then(|| MaxPool2d::new(spec.pool, spec.pool)),
            });
            channels = spec.channels;
        }
        Ok(FrameCnn {
            blocks,
            out_channels: channels,
            out_side: config.cnn_output_side()?,
            features: config.cnn_features()?,
        })
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let n = x.dim(0);
        let mut h = x.clone();
        for b in &mut self.blocks {
            h = match mode {
                Mode::Train => b.conv.forward(&h)?,
                Mode::Infer => b.conv.infer(&h)?,
            };
            h = b.norm.forward(&h, mode)?;
            h = b.relu.forward(&h);
            if let Some(pool) = &mut b.pool {
                h = pool.forward(&h)?;
            }
        }
        h.reshape(&[n, self.features])
    }

    /// Accumulates parameter gradients; the image gradient is not needed.
    pub fn backward(&mut self, dy: &Tensor<T>) -> Result<()> {
        let mut g = dy.clone().reshape(&[dy.dim(0), self.out_channels, self.out_side, self.out_side])?;
        for b in self.blocks.iter_mut().rev() {
            if let Some(pool) = &mut b.pool {
                g = pool.backward(&g)?;
            }
            g = b.relu.backward(&g)?;
            g = b.norm.backward(&g)?;
            g = b.conv.backward(&g)?;
        }
        Ok(())
    }
}

impl<T: Scalar> Layer<T> for FrameCnn<T> {
    fn params(&self) -> Vec<&Param<T>> {
        self.blocks
            .iter()
            .flat_map(|b| b.conv.params().into_iter().chain(b.norm.params()))
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        self.blocks
            .iter_mut()
            .flat_map(|b| {
                let mut p = b.conv.params_mut();
                p.extend(b.norm.params_mut());
                p
            })
            .collect()
    }
}
