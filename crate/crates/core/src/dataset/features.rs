use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BreathInstance, BreathType, DatasetError, InstanceSource};
use crate::dsp::{align, mfcc, pad_center, resample, FeatureSequence, MfccConfig};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub mfcc: MfccConfig,
}

/// Time-aligned model inputs of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFeatures {
    pub audio: FeatureSequence,
    pub motion: FeatureSequence,
}

impl InstanceFeatures {
    pub fn frames(&self) -> usize {
        self.audio.frames()
    }
}

/// Resample, centre-pad to the type's target duration, MFCC, then truncate
/// audio and motion frames to the shorter of the two.
pub fn extract_features(inst: &BreathInstance, cfg: &PreprocessConfig) -> Result<InstanceFeatures, DatasetError> {
    let target = inst.record.breath_type.padded_duration();
    let wrap = |e| DatasetError::Instance {
        instance: inst.record.id().to_string(),
        msg: format!("{e}"),
    };
    let audio = resample(&inst.audio, cfg.mfcc.target_rate).map_err(wrap)?;
    let audio = pad_center(&audio, target).map_err(wrap)?;
    let audio = mfcc(&audio, &cfg.mfcc).map_err(wrap)?;
    let motion = pad_center(&inst.motion, target).map_err(wrap)?;
    let motion = motion.to_features().map_err(wrap)?;
    let (audio, motion) = align(&audio, &motion).map_err(wrap)?;
    Ok(InstanceFeatures { audio, motion })
}

/// Features of every instance of one breath type, keyed by manifest index.
#[derive(Debug, Clone)]
pub struct FeatureBank {
    pub breath_type: BreathType,
    items: BTreeMap<usize, InstanceFeatures>,
}

impl FeatureBank {
    pub fn get(&self, index: usize) -> Option<&InstanceFeatures> {
        self.items.get(&index)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &InstanceFeatures)> {
        self.items.iter().map(|(i, f)| (*i, f))
    }

    /// Looks up several indices, failing on the first one not in the bank.
    pub fn select(&self, indices: &[usize]) -> Result<Vec<&InstanceFeatures>, DatasetError> {
        indices
            .iter()
            .map(|i| {
                self.items
                    .get(i)
                    .ok_or_else(|| DatasetError::Config(format!("instance {i} is not a {} breath", self.breath_type)))
            })
            .collect()
    }
}

pub fn extract_bank(
    source: &dyn InstanceSource,
    breath_type: BreathType,
    cfg: &PreprocessConfig,
) -> Result<FeatureBank, DatasetError> {
    let indices = source.manifest().indices_of_type(breath_type);
    let items = indices
        .par_iter()
        .map(|&i| {
            let inst = source.load(i)?;
            extract_features(&inst, cfg).map(|f| (i, f))
        })
        .collect::<Result<BTreeMap<_, _>, _>>()?;
    Ok(FeatureBank { breath_type, items })
}
