//! The two recognizers, training, and checkpoints.

mod checkpoint;
mod cnn;
mod config;
mod mcsign;
mod network;
mod rsign;
mod train;

pub use checkpoint::{
    decode_checkpoint, decode_checkpoint_meta, encode_checkpoint, load_checkpoint, load_checkpoint_as,
    save_checkpoint, Checkpoint, CheckpointMeta, RngState, TensorMeta, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use cnn::FrameCnn;
pub use config::{Architecture, ConvSpec, ModelConfig};
pub use mcsign::{build_mcsign_c, McSignC};
pub use network::{model_forward, parameter_count, Network};
pub use rsign::{build_rsign_c, RSignC};
pub use train::{fit, train_step, EpochLog, FitOutcome, StepStats, TrainingLog};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::nncore::Scalar;

/// Builds the architecture named in `config` with weights drawn from `seed`.
pub fn build_model<T: Scalar>(config: &ModelConfig, seed: u64) -> Result<Box<dyn Network<T>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match config.architecture {
        Architecture::RSignC => Box::new(build_rsign_c::<T>(config, &mut rng)?),
        Architecture::MCSignC => Box::new(build_mcsign_c::<T>(config, &mut rng)?),
    })
}
