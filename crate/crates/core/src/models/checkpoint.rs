use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, ModelConfig, ModelError};
use crate::autodiff::{Scalar, WeightSet};
use crate::dsp::FeatureStats;

pub const CHECKPOINT_FORMAT: &str = "breathauth-model";

/// Config header, standardisation statistics and weights of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub format: String,
    pub config: ModelConfig,
    pub embedding_dim: usize,
    pub trained: bool,
    #[serde(default)]
    pub classes: Vec<String>,
    pub audio_stats: FeatureStats,
    pub motion_stats: FeatureStats,
    pub weights: WeightSet,
}

impl<T: Scalar> Model<T> {
    pub fn checkpoint(&self) -> ModelCheckpoint {
        ModelCheckpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            config: self.config().clone(),
            embedding_dim: self.embedding_dim(),
            trained: self.is_trained(),
            classes: self.classes().to_vec(),
            audio_stats: self.audio_stats().clone(),
            motion_stats: self.motion_stats().clone(),
            weights: WeightSet::capture(self.params()),
        }
    }

    pub fn from_checkpoint(ck: &ModelCheckpoint) -> Result<Self, ModelError> {
        if ck.format != CHECKPOINT_FORMAT {
            return Err(ModelError::Checkpoint(format!("unknown checkpoint format {:?}", ck.format)));
        }
        let mut model = Model::new(ck.config.clone(), 0)?;
        if ck.embedding_dim != model.embedding_dim() {
            return Err(ModelError::Checkpoint(format!(
                "header says embedding dim {}, config gives {}",
                ck.embedding_dim,
                model.embedding_dim()
            )));
        }
        ck.weights.restore(model.params_mut())?;
        model.set_stats(ck.audio_stats.clone(), ck.motion_stats.clone())?;
        if !ck.classes.is_empty() {
            model.set_classes(ck.classes.clone())?;
        }
        if ck.trained {
            model.mark_trained();
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let json = serde_json::to_string(&self.checkpoint()).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        fs::write(path, json).map_err(|e| ModelError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = fs::read_to_string(path).map_err(|e| ModelError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let ck: ModelCheckpoint =
            serde_json::from_str(&text).map_err(|e| ModelError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_checkpoint(&ck)
    }
}
