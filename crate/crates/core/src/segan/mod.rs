//! Encoder-decoder generator, conditioned discriminator, least-squares
//! adversarial training with an L1 term, inference and checkpoints.

mod checkpoint;
mod config;
mod enhance;
mod loss;
mod model;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, ModelCheckpoint, Provenance, FORMAT_VERSION, MAGIC};
pub use config::{DiscriminatorConfig, GeneratorConfig, InitMode, ModelProfile, TrainConfig};
pub use enhance::{enhance, enhance_chunks};
pub use loss::{d_loss_graph, g_loss_graph, losses, LossVars};
pub use model::{
    bind, discriminator_forward, discriminator_graph, discriminator_layout, encode, generator_forward, generator_graph, generator_layout,
    init_discriminator, init_generator, sample_z,
};
pub use train::{corpus_fingerprint, finetune, prepare_pairs, train, write_loss_log, LossRecord, TrainOutcome, TrainingPair};

use crate::audio::AudioError;
use crate::tensorgrad::TensorError;

#[derive(Debug, thiserror::Error)]
pub enum SeganError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("architecture mismatch: {0}")]
    Architecture(String),
    #[error("non-finite {term} at epoch {epoch}, batch {batch}: {detail}")]
    NonFinite { epoch: usize, batch: usize, term: &'static str, detail: String },
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("corrupt checkpoint {path}: {detail}")]
    Corrupt { path: String, detail: String },
    #[error("checkpoint {path} has format version {found}; this build reads version {supported}")]
    Version { path: String, found: u32, supported: u32 },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
