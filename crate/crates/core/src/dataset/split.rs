use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BreathType, DatasetError, DatasetManifest};

pub const VAL_PER_SUBJECT: usize = 5;
pub const TEST_PER_SUBJECT: usize = 5;
/// Validation plus test plus at least one training instance.
pub const MIN_PER_SUBJECT: usize = VAL_PER_SUBJECT + TEST_PER_SUBJECT + 1;

/// Instance indices (into the manifest) of each partition, each sorted by instance id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub breath_type: BreathType,
    pub seed: u64,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitSpec {
    /// Copy with every instance of the listed subjects removed from all partitions.
    pub fn without_subjects(&self, manifest: &DatasetManifest, subjects: &[String]) -> SplitSpec {
        let keep = |v: &Vec<usize>| -> Vec<usize> {
            v.iter()
                .copied()
                .filter(|&i| !subjects.contains(&manifest.instances()[i].subject_id))
                .collect()
        };
        SplitSpec {
            breath_type: self.breath_type,
            seed: self.seed,
            train: keep(&self.train),
            val: keep(&self.val),
            test: keep(&self.test),
        }
    }

    /// Distinct subjects of the training partition, sorted.
    pub fn train_subjects(&self, manifest: &DatasetManifest) -> Vec<String> {
        let mut s: Vec<String> = self
            .train
            .iter()
            .map(|&i| manifest.instances()[i].subject_id.clone())
            .collect();
        s.sort();
        s.dedup();
        s
    }
}

/// Per subject, a seeded uniform draw of 5 validation and 5 test instances of
/// `breath_type`; the remainder trains.
pub fn make_split(manifest: &DatasetManifest, breath_type: BreathType, seed: u64) -> Result<SplitSpec, DatasetError> {
    let of_type = manifest.indices_of_type(breath_type);
    let per_subject: Vec<(String, Vec<usize>)> = manifest
        .subjects()
        .iter()
        .map(|s| {
            let idx = of_type
                .iter()
                .copied()
                .filter(|&i| &manifest.instances()[i].subject_id == s)
                .collect();
            (s.clone(), idx)
        })
        .collect();
    let short: Vec<(String, usize)> = per_subject
        .iter()
        .filter(|(_, v)| v.len() < MIN_PER_SUBJECT)
        .map(|(s, v)| (s.clone(), v.len()))
        .collect();
    if !short.is_empty() {
        return Err(DatasetError::TooFewInstances {
            breath_type,
            needed: MIN_PER_SUBJECT,
            subjects: short,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (_, mut idx) in per_subject {
        idx.shuffle(&mut rng);
        val.extend_from_slice(&idx[..VAL_PER_SUBJECT]);
        test.extend_from_slice(&idx[VAL_PER_SUBJECT..VAL_PER_SUBJECT + TEST_PER_SUBJECT]);
        train.extend_from_slice(&idx[VAL_PER_SUBJECT + TEST_PER_SUBJECT..]);
    }
    let by_id = |v: &mut Vec<usize>| v.sort_by(|&a, &b| manifest.instances()[a].id().cmp(manifest.instances()[b].id()));
    by_id(&mut train);
    by_id(&mut val);
    by_id(&mut test);
    Ok(SplitSpec {
        breath_type,
        seed,
        train,
        val,
        test,
    })
}
