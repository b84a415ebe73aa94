//! A small convolutional score-distribution predictor trained end to end on
//! the weighted EMD loss, with depth-ordered layer freezing.

mod checkpoint;
mod network;
mod optim;
mod train;

use thiserror::Error;

use crate::dist::DistError;

pub use self::checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use self::network::{Architecture, ConvBlock, InputTensor, Layer, LayerKind, ModelConfig};
pub use self::optim::{OptimizerKind, OptimizerState, TrainConfig};
pub use self::train::{mean_emd, train, EpochStats, Example, TrainReport};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid training config: {0}")]
    InvalidTrainConfig(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
