//! Breath corpus: instance metadata, the on-disk layout, a seeded synthetic
//! cohort generator, train/val/test splits and verification trial lists.

mod features;
mod scenario;
mod split;
mod store;
mod synth;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dsp::{DspError, MotionTrace, Waveform};

pub use features::{extract_bank, extract_features, FeatureBank, InstanceFeatures, PreprocessConfig};
pub use scenario::{make_scenario, ScenarioKind, Trial, VerificationScenario, HELD_OUT_SUBJECTS};
pub use split::{make_split, SplitSpec, MIN_PER_SUBJECT, TEST_PER_SUBJECT, VAL_PER_SUBJECT};
pub use store::{load_manifest, save_dataset, save_manifest, DiskDataset, MANIFEST_FILE};
pub use synth::{synth_generate, CountSpec, SubjectProfile, SynthConfig, SyntheticCohort};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BreathType {
    Normal,
    Deep,
    Strong,
}

/// Duration statistics (seconds) of annotated instances of one breath type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationStats {
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub mean: f64,
    pub std: f64,
}

impl BreathType {
    pub const ALL: [BreathType; 3] = [BreathType::Normal, BreathType::Deep, BreathType::Strong];

    pub fn duration_stats(self) -> DurationStats {
        match self {
            BreathType::Normal => DurationStats { min: 0.96, max: 4.13, median: 2.04, mean: 2.12, std: 0.47 },
            BreathType::Deep => DurationStats { min: 1.35, max: 4.49, median: 2.50, mean: 2.58, std: 0.61 },
            BreathType::Strong => DurationStats { min: 0.40, max: 2.48, median: 0.86, mean: 1.02, std: 0.46 },
        }
    }

    /// Length every instance of this type is centre-padded to.
    pub fn padded_duration(self) -> f64 {
        match self {
            BreathType::Normal | BreathType::Deep => 4.5,
            BreathType::Strong => 2.5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BreathType::Normal => "normal",
            BreathType::Deep => "deep",
            BreathType::Strong => "strong",
        }
    }
}

impl fmt::Display for BreathType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BreathType {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Ok(BreathType::Normal),
            "deep" => Ok(BreathType::Deep),
            "strong" => Ok(BreathType::Strong),
            other => Err(DatasetError::Schema(format!("unknown breath type {other:?}"))),
        }
    }
}

/// One row of `manifest.json`. Paths are relative to the dataset root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub subject_id: String,
    pub session_id: String,
    pub breath_type: BreathType,
    pub duration_s: f64,
    pub audio_path: String,
    pub motion_path: String,
}

impl InstanceRecord {
    /// Stable identifier: the audio path without its extension.
    pub fn id(&self) -> &str {
        self.audio_path.strip_suffix(".wav").unwrap_or(&self.audio_path)
    }
}

/// A labelled recording with its signals.
#[derive(Debug, Clone, PartialEq)]
pub struct BreathInstance {
    pub record: InstanceRecord,
    pub audio: Waveform,
    pub motion: MotionTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    instances: Vec<InstanceRecord>,
    subjects: Vec<String>,
}

impl DatasetManifest {
    /// Subjects are the sorted distinct `subject_id`s of the records.
    pub fn new(instances: Vec<InstanceRecord>) -> Result<Self, DatasetError> {
        let mut ids = BTreeSet::new();
        for r in &instances {
            if !ids.insert(r.id().to_string()) {
                return Err(DatasetError::Schema(format!("duplicate instance {}", r.id())));
            }
            if r.subject_id.is_empty() {
                return Err(DatasetError::Schema(format!("instance {} has an empty subject_id", r.id())));
            }
            if !(r.duration_s > 0.0 && r.duration_s.is_finite()) {
                return Err(DatasetError::Schema(format!("instance {} has duration {}", r.id(), r.duration_s)));
            }
        }
        let subjects: BTreeSet<String> = instances.iter().map(|r| r.subject_id.clone()).collect();
        Ok(Self {
            instances,
            subjects: subjects.into_iter().collect(),
        })
    }

    pub fn instances(&self) -> &[InstanceRecord] {
        &self.instances
    }

    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Indices of instances of `breath_type`, sorted by instance id.
    pub fn indices_of_type(&self, breath_type: BreathType) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.instances.len())
            .filter(|&i| self.instances[i].breath_type == breath_type)
            .collect();
        idx.sort_by(|&a, &b| self.instances[a].id().cmp(self.instances[b].id()));
        idx
    }

    pub fn count(&self, subject: &str, breath_type: BreathType) -> usize {
        self.instances
            .iter()
            .filter(|r| r.subject_id == subject && r.breath_type == breath_type)
            .count()
    }

    pub fn to_json(&self) -> Result<String, DatasetError> {
        serde_json::to_string_pretty(&self.instances).map_err(|e| DatasetError::Schema(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self, DatasetError> {
        let records: Vec<InstanceRecord> =
            serde_json::from_str(s).map_err(|e| DatasetError::Schema(format!("manifest.json: {e}")))?;
        Self::new(records)
    }
}

/// Anything that can hand out the signals behind a manifest row.
pub trait InstanceSource: Sync {
    fn manifest(&self) -> &DatasetManifest;
    fn load(&self, index: usize) -> Result<BreathInstance, DatasetError>;
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("instance {instance}: {msg}")]
    Instance { instance: String, msg: String },
    #[error("subjects with too few {breath_type} instances (need {needed}): {subjects:?}")]
    TooFewInstances {
        breath_type: BreathType,
        needed: usize,
        subjects: Vec<(String, usize)>,
    },
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
