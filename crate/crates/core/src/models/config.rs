use serde::{Deserialize, Serialize};

use crate::cues::{DEFAULT_SCENE_SIDE, DEFAULT_SKELETON_SIDE};
use crate::dataio::InputKind;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Architecture {
    /// Recurrent-convolutional network over rendered frames.
    RSignC,
    /// Multi-cue network over skeleton images, displacement, and location.
    MCSignC,
}

impl Architecture {
    pub fn input_kind(self) -> InputKind {
        match self {
            Architecture::RSignC => InputKind::Frames,
            Architecture::MCSignC => InputKind::Cues,
        }
    }
}

/// One convolution block: `channels` feature maps of `kernel × kernel` (same
/// padding), batch norm, ReLU, then `pool × pool` max pooling (`pool <= 1`
/// disables it).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub channels: usize,
    pub kernel: usize,
    pub pool: usize,
}

impl ConvSpec {
    pub const fn new(channels: usize, kernel: usize, pool: usize) -> Self {
        ConvSpec { channels, kernel, pool }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub skeleton_side: usize,
    pub scene_side: usize,
    pub conv: Vec<ConvSpec>,
    /// Frame-level dense widths between the CNN and the LSTM (RSign-C).
    #[serde(default)]
    pub dense: Vec<usize>,
    /// Sequence LSTM width (RSign-C).
    #[serde(default)]
    pub frame_lstm: usize,
    /// Branch LSTM widths (MCSign-C).
    #[serde(default)]
    pub image_lstm: usize,
    #[serde(default)]
    pub movement_lstm: usize,
    #[serde(default)]
    pub location_lstm: usize,
    /// Per-direction widths of the fusion BLSTMs (MCSign-C).
    #[serde(default)]
    pub hand_blstm: usize,
    #[serde(default)]
    pub cross_blstm: usize,
    pub vocab_size: usize,
    #[serde(default)]
    pub dropout: f64,
    /// L2 coefficient λ; the loss gains (λ/2)·Σw² over weight tensors.
    #[serde(default)]
    pub l2: f64,
}

impl ModelConfig {
    /// Two-block multi-cue network used for desk-scale experiments.
    pub fn mcsign_c_mini(vocab_size: usize) -> Self {
        ModelConfig {
            architecture: Architecture::MCSignC,
            skeleton_side: DEFAULT_SKELETON_SIDE,
            scene_side: DEFAULT_SCENE_SIDE,
            conv: vec![ConvSpec::new(8, 3, 2), ConvSpec::new(16, 3, 2)],
            dense: Vec::new(),
            frame_lstm: 0,
            image_lstm: 64,
            movement_lstm: 16,
            location_lstm: 8,
            hand_blstm: 64,
            cross_blstm: 64,
            vocab_size,
            dropout: 0.2,
            l2: 0.0,
        }
    }

    /// Full-depth frame recognizer: six conv blocks, two dense layers, LSTM.
    pub fn rsign_c_default(vocab_size: usize) -> Self {
        ModelConfig {
            architecture: Architecture::RSignC,
            skeleton_side: DEFAULT_SKELETON_SIDE,
            scene_side: DEFAULT_SCENE_SIDE,
            conv: [16, 32, 48, 64, 96, 128].iter().map(|&c| ConvSpec::new(c, 3, 2)).collect(),
            dense: vec![256, 256],
            frame_lstm: 256,
            image_lstm: 0,
            movement_lstm: 0,
            location_lstm: 0,
            hand_blstm: 0,
            cross_blstm: 0,
            vocab_size,
            dropout: 0.2,
            l2: 0.0,
        }
    }

    /// Four-block frame recognizer used for desk-scale experiments.
    pub fn rsign_c_mini(vocab_size: usize) -> Self {
        ModelConfig {
            conv: [8, 16, 16, 32].iter().map(|&c| ConvSpec::new(c, 3, 2)).collect(),
            dense: vec![128, 64],
            frame_lstm: 64,
            ..Self::rsign_c_default(vocab_size)
        }
    }

    pub fn input_kind(&self) -> InputKind {
        self.architecture.input_kind()
    }

    /// Side of the square images the CNN consumes.
    pub fn input_side(&self) -> usize {
        match self.architecture {
            Architecture::RSignC => self.scene_side,
            Architecture::MCSignC => self.skeleton_side,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.vocab_size + 1
    }

    /// Spatial side after every conv block.
    pub fn cnn_output_side(&self) -> Result<usize> {
        let mut side = self.input_side();
        for (i, c) in self.conv.iter().enumerate() {
            if c.pool > 1 {
                if side < c.pool {
                    return Err(Error::Config(format!(
                        "conv block {i} pools a {side}x{side} map with window {}",
                        c.pool
                    )));
                }
                side /= c.pool;
            }
        }
        Ok(side)
    }

    pub fn cnn_features(&self) -> Result<usize> {
        let side = self.cnn_output_side()?;
        Ok(side * side * self.conv.last().map_or(1, |c| c.channels))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(Error::Config(format!("{name} must be >= 1")))
            } else {
                Ok(())
            }
        };
        positive("vocab_size", self.vocab_size)?;
        positive("input side", self.input_side())?;
        if self.conv.is_empty() {
            return Err(Error::Config("at least one conv block is required".into()));
        }
        for c in &self.conv {
            positive("conv channels", c.channels)?;
            positive("conv kernel", c.kernel)?;
        }
        match self.architecture {
            Architecture::RSignC => {
                for &d in &self.dense {
                    positive("dense width", d)?;
                }
                positive("frame_lstm", self.frame_lstm)?;
            }
            Architecture::MCSignC => {
                positive("image_lstm", self.image_lstm)?;
                positive("movement_lstm", self.movement_lstm)?;
                positive("location_lstm", self.location_lstm)?;
                positive("hand_blstm", self.hand_blstm)?;
                positive("cross_blstm", self.cross_blstm)?;
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Config(format!("l2 {} must be >= 0", self.l2)));
        }
        self.cnn_output_side()?;
        Ok(())
    }

    /// Width of the per-hand branch concatenation.
    pub fn hand_concat_width(&self) -> usize {
        self.image_lstm + self.movement_lstm + self.location_lstm
    }
}
