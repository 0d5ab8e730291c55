//! CNN-LSTM and two-stage TCN identification networks, in multimodal and
//! single-modality variants, with a pre-logit embedding for verification.

mod checkpoint;
mod config;
mod network;

pub use checkpoint::{ModelCheckpoint, CHECKPOINT_FORMAT};
pub use config::{
    ArchConfig, Architecture, CnnLstmConfig, Mode, ModelConfig, TcnConfig, AUDIO_CHANNELS, MOTION_CHANNELS,
};
pub use network::{softmax, Forward, ForwardMode, Inputs, Model, ModelOutput};

use crate::autodiff::AutodiffError;
use crate::dsp::DspError;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("model has not been trained")]
    Untrained,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
