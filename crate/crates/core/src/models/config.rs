use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

pub const AUDIO_CHANNELS: usize = 20;
pub const MOTION_CHANNELS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    CnnLstm,
    Tcn,
}

impl Architecture {
    pub const ALL: [Architecture; 2] = [Architecture::CnnLstm, Architecture::Tcn];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::CnnLstm => "cnn-lstm",
            Architecture::Tcn => "tcn",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Architecture {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cnn-lstm" | "cnn_lstm" | "cnnlstm" => Ok(Architecture::CnnLstm),
            "tcn" => Ok(Architecture::Tcn),
            other => Err(ModelError::Config(format!("unknown architecture {other:?}"))),
        }
    }
}

/// Which input branches a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Multimodal,
    Audio,
    Motion,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Multimodal, Mode::Audio, Mode::Motion];

    pub fn uses_audio(self) -> bool {
        matches!(self, Mode::Multimodal | Mode::Audio)
    }

    pub fn uses_motion(self) -> bool {
        matches!(self, Mode::Multimodal | Mode::Motion)
    }

    pub fn branches(self) -> usize {
        if self == Mode::Multimodal {
            2
        } else {
            1
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Multimodal => "multimodal",
            Mode::Audio => "audio",
            Mode::Motion => "motion",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "multimodal" | "fusion" => Ok(Mode::Multimodal),
            "audio" => Ok(Mode::Audio),
            "motion" => Ok(Mode::Motion),
            other => Err(ModelError::Config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnLstmConfig {
    pub n_filters: usize,
    pub kernel: usize,
    pub stride: usize,
    pub lstm_hidden: usize,
}

impl Default for CnnLstmConfig {
    fn default() -> Self {
        Self {
            n_filters: 64,
            kernel: 9,
            stride: 1,
            lstm_hidden: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcnConfig {
    pub stage1_filters: usize,
    pub stage2_filters: usize,
    pub kernel: usize,
    pub dilations: Vec<usize>,
    pub dropout: f64,
}

impl Default for TcnConfig {
    fn default() -> Self {
        Self {
            stage1_filters: 32,
            stage2_filters: 64,
            kernel: 5,
            dilations: vec![1, 2, 4, 8],
            dropout: 0.1,
        }
    }
}

impl TcnConfig {
    /// Input frames seen by one output frame of a single stage.
    pub fn stage_receptive_field(&self) -> usize {
        1 + (self.kernel - 1) * self.dilations.iter().sum::<usize>()
    }

    pub fn receptive_field(&self) -> usize {
        2 * self.stage_receptive_field() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ArchConfig {
    CnnLstm(CnnLstmConfig),
    Tcn(TcnConfig),
}

impl ArchConfig {
    pub fn architecture(&self) -> Architecture {
        match self {
            ArchConfig::CnnLstm(_) => Architecture::CnnLstm,
            ArchConfig::Tcn(_) => Architecture::Tcn,
        }
    }

    pub fn default_for(arch: Architecture) -> Self {
        match arch {
            Architecture::CnnLstm => ArchConfig::CnnLstm(CnnLstmConfig::default()),
            Architecture::Tcn => ArchConfig::Tcn(TcnConfig::default()),
        }
    }
}

/// Everything needed to rebuild a network's parameter layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub arch: ArchConfig,
    pub mode: Mode,
    pub n_subjects: usize,
    pub audio_channels: usize,
    pub motion_channels: usize,
}

impl ModelConfig {
    pub fn new(arch: ArchConfig, mode: Mode, n_subjects: usize) -> Self {
        Self {
            arch,
            mode,
            n_subjects,
            audio_channels: AUDIO_CHANNELS,
            motion_channels: MOTION_CHANNELS,
        }
    }

    pub fn embedding_dim(&self) -> usize {
        match &self.arch {
            ArchConfig::CnnLstm(c) => c.lstm_hidden,
            ArchConfig::Tcn(c) => c.stage2_filters,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Config(m));
        if self.n_subjects < 2 {
            return bad(format!("{} output classes; need at least 2", self.n_subjects));
        }
        if self.audio_channels == 0 || self.motion_channels == 0 {
            return bad("input channel counts must be positive".into());
        }
        match &self.arch {
            ArchConfig::CnnLstm(c) => {
                if c.n_filters == 0 || c.kernel == 0 || c.stride == 0 || c.lstm_hidden == 0 {
                    return bad(format!("cnn-lstm sizes must be positive: {c:?}"));
                }
            }
            ArchConfig::Tcn(c) => {
                if c.stage1_filters == 0 || c.kernel == 0 {
                    return bad(format!("tcn sizes must be positive: {c:?}"));
                }
                if c.stage2_filters <= c.stage1_filters {
                    return bad(format!(
                        "stage-2 filters ({}) must exceed stage-1 filters ({})",
                        c.stage2_filters, c.stage1_filters
                    ));
                }
                if c.dilations.is_empty() || c.dilations.iter().enumerate().any(|(i, &d)| d != 1 << i) {
                    return bad(format!("dilations must be 1, 2, 4, ...; got {:?}", c.dilations));
                }
                if !(0.0..1.0).contains(&c.dropout) {
                    return bad(format!("dropout {} outside [0, 1)", c.dropout));
                }
            }
        }
        Ok(())
    }
}
