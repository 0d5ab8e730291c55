use std::fs;
use std::path::{Path, PathBuf};

use super::{BreathInstance, DatasetError, DatasetManifest, InstanceRecord, InstanceSource};
use crate::dsp::{read_motion_csv, read_wav, wav_len, write_motion_csv, write_wav, DspError};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Largest accepted gap between the annotated duration and a file's length.
const AUDIO_SLACK_S: f64 = 1e-3;
const MOTION_SLACK_S: f64 = 0.02 + 1e-9;

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn instance_err(r: &InstanceRecord, msg: impl Into<String>) -> DatasetError {
    DatasetError::Instance {
        instance: r.id().to_string(),
        msg: msg.into(),
    }
}

fn dsp_instance_err(r: &InstanceRecord, e: DspError) -> DatasetError {
    instance_err(r, e.to_string())
}

/// Writes `manifest.json` under `root`.
pub fn save_manifest(manifest: &DatasetManifest, root: &Path) -> Result<(), DatasetError> {
    fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
    let path = root.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_json()? + "\n").map_err(|e| io_err(&path, e))
}

/// Writes every instance's WAV and CSV plus the manifest.
pub fn save_dataset(source: &dyn InstanceSource, root: &Path) -> Result<(), DatasetError> {
    let manifest = source.manifest();
    for i in 0..manifest.len() {
        let inst = source.load(i)?;
        let r = &inst.record;
        let audio = root.join(&r.audio_path);
        let motion = root.join(&r.motion_path);
        for p in [&audio, &motion] {
            if let Some(dir) = p.parent() {
                fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            }
        }
        write_wav(&audio, &inst.audio)?;
        write_motion_csv(&motion, &inst.motion)?;
    }
    save_manifest(manifest, root)
}

/// A dataset directory whose manifest has been validated against its files.
#[derive(Debug, Clone)]
pub struct DiskDataset {
    root: PathBuf,
    manifest: DatasetManifest,
}

/// Loads `root/manifest.json` and checks every referenced file: it must
/// exist, parse, and match the annotated duration.
pub fn load_manifest(root: &Path) -> Result<DiskDataset, DatasetError> {
    let path = root.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let manifest = DatasetManifest::from_json(&text)?;
    for r in manifest.instances() {
        let audio = root.join(&r.audio_path);
        let motion = root.join(&r.motion_path);
        if !audio.is_file() {
            return Err(instance_err(r, format!("missing audio file {}", audio.display())));
        }
        if !motion.is_file() {
            return Err(instance_err(r, format!("missing motion file {}", motion.display())));
        }
        let (n, rate) = wav_len(&audio).map_err(|e| dsp_instance_err(r, e))?;
        let audio_s = n as f64 / rate as f64;
        if (audio_s - r.duration_s).abs() > AUDIO_SLACK_S {
            return Err(instance_err(
                r,
                format!("audio lasts {audio_s:.4} s but duration_s is {:.4}", r.duration_s),
            ));
        }
        let trace = read_motion_csv(&motion).map_err(|e| dsp_instance_err(r, e))?;
        if (trace.duration() - r.duration_s).abs() > MOTION_SLACK_S {
            return Err(instance_err(
                r,
                format!("motion lasts {:.3} s but duration_s is {:.4}", trace.duration(), r.duration_s),
            ));
        }
    }
    Ok(DiskDataset {
        root: root.to_path_buf(),
        manifest,
    })
}

impl DiskDataset {
    pub fn root(&self) -> &Path {
        &self.root
    }
}

impl InstanceSource for DiskDataset {
    fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    fn load(&self, index: usize) -> Result<BreathInstance, DatasetError> {
        let r = self
            .manifest
            .instances()
            .get(index)
            .ok_or_else(|| DatasetError::Config(format!("instance index {index} out of range")))?;
        let audio = read_wav(&self.root.join(&r.audio_path)).map_err(|e| dsp_instance_err(r, e))?;
        let motion = read_motion_csv(&self.root.join(&r.motion_path)).map_err(|e| dsp_instance_err(r, e))?;
        Ok(BreathInstance {
            record: r.clone(),
            audio,
            motion,
        })
    }
}
