//! Masked Wasserstein GAN with gradient penalty for categorical rows.
//!
//! The generator emits one softmax block per attribute. During training its
//! output is multiplied by the mask of the real batch it is paired with, so
//! fake rows carry the same missing blocks (all zeros) as the real rows the
//! critic compares them with.

mod checkpoint;
mod losses;
mod nets;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use losses::{
    critic_loss, distance_regularizers, generator_loss, gradient_penalty, masked_generate,
    pairwise_dist, penalty_at, r_ad, r_bd, sample_latent, DistanceReference,
};
pub use nets::{CriticNet, GeneratorNet, LEAKY_SLOPE};
pub use train::{
    generate_population, train, train_observed, EpochRecord, Trained, TrainingConfig, TrainingLog,
};

use thiserror::Error;

use crate::autodiff::EngineError;
use crate::DataError;

#[derive(Debug, Error)]
pub enum WganError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("training diverged at epoch {epoch}: non-finite {term}")]
    Diverged { epoch: usize, term: &'static str },
    #[error("checkpoint format error: {0}")]
    Format(String),
    #[error("checkpoint is incompatible: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
