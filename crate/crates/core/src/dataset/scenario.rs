use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, DatasetManifest, SplitSpec};

/// Subjects withheld from enrollment and training in the unseen-impostor scenario.
pub const HELD_OUT_SUBJECTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    /// Impostors are other enrolled subjects.
    Enrolled,
    /// Impostors also include subjects the model never saw.
    Unseen,
}

impl ScenarioKind {
    pub fn number(self) -> u8 {
        match self {
            ScenarioKind::Enrolled => 1,
            ScenarioKind::Unseen => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(ScenarioKind::Enrolled),
            2 => Some(ScenarioKind::Unseen),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub claimed: String,
    /// Manifest index of the presented instance.
    pub instance: usize,
    pub genuine: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationScenario {
    pub kind: ScenarioKind,
    pub enrolled: Vec<String>,
    pub held_out: Vec<String>,
    pub trials: Vec<Trial>,
}

impl VerificationScenario {
    /// The split a model for this scenario may be trained on.
    pub fn training_split(&self, manifest: &DatasetManifest, split: &SplitSpec) -> SplitSpec {
        split.without_subjects(manifest, &self.held_out)
    }
}

/// Builds the trial list over the test partition. Every enrolled subject is
/// claimed once per test instance of the trial pool: its own test instances
/// are genuine, everything else is an impostor. For [`ScenarioKind::Unseen`]
/// the pool adds the test instances of `HELD_OUT_SUBJECTS` seed-chosen
/// subjects, who are removed from enrollment.
pub fn make_scenario(
    manifest: &DatasetManifest,
    split: &SplitSpec,
    kind: ScenarioKind,
    seed: u64,
) -> Result<VerificationScenario, DatasetError> {
    let mut subjects: Vec<String> = split
        .test
        .iter()
        .map(|&i| manifest.instances()[i].subject_id.clone())
        .collect();
    subjects.sort();
    subjects.dedup();
    let (enrolled, held_out) = match kind {
        ScenarioKind::Enrolled => {
            if subjects.len() < 2 {
                return Err(DatasetError::Config(format!(
                    "scenario 1 needs at least 2 subjects with test instances, found {}",
                    subjects.len()
                )));
            }
            (subjects, Vec::new())
        }
        ScenarioKind::Unseen => {
            if subjects.len() < HELD_OUT_SUBJECTS + 1 {
                return Err(DatasetError::Config(format!(
                    "scenario 2 needs at least {} subjects, found {}",
                    HELD_OUT_SUBJECTS + 1,
                    subjects.len()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut held: Vec<String> = subjects.choose_multiple(&mut rng, HELD_OUT_SUBJECTS).cloned().collect();
            held.sort();
            let enrolled = subjects.into_iter().filter(|s| !held.contains(s)).collect();
            (enrolled, held)
        }
    };
    let mut trials = Vec::with_capacity(enrolled.len() * split.test.len());
    for claimed in &enrolled {
        for &i in &split.test {
            let subject = &manifest.instances()[i].subject_id;
            if !enrolled.contains(subject) && !held_out.contains(subject) {
                continue;
            }
            trials.push(Trial {
                claimed: claimed.clone(),
                instance: i,
                genuine: subject == claimed,
            });
        }
    }
    Ok(VerificationScenario {
        kind,
        enrolled,
        held_out,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{make_split, BreathType, CountSpec, InstanceSource, SynthConfig, SyntheticCohort};

    fn split(n: usize) -> (SyntheticCohort, SplitSpec) {
        let c = SyntheticCohort::generate(SynthConfig {
            counts: CountSpec::Uniform { min: 11, max: 16 },
            breath_types: vec![BreathType::Normal],
            ..SynthConfig::new(n, 6, 0.1)
        })
        .unwrap();
        let s = make_split(c.manifest(), BreathType::Normal, 2).unwrap();
        (c, s)
    }

    #[test]
    fn scenario_one_counts() {
        let (c, s) = split(20);
        let sc = make_scenario(c.manifest(), &s, ScenarioKind::Enrolled, 0).unwrap();
        assert_eq!(sc.trials.len(), 2000);
        assert_eq!(sc.trials.iter().filter(|t| t.genuine).count(), 100);
        for subj in &sc.enrolled {
            let mine: Vec<&Trial> = sc.trials.iter().filter(|t| &t.claimed == subj).collect();
            assert_eq!(mine.iter().filter(|t| t.genuine).count(), 5);
            assert_eq!(mine.iter().filter(|t| !t.genuine).count(), 95);
        }
    }

    #[test]
    fn scenario_two_keeps_held_out_subjects_unseen() {
        let (c, s) = split(8);
        let sc = make_scenario(c.manifest(), &s, ScenarioKind::Unseen, 13).unwrap();
        assert_eq!(sc.held_out.len(), 4);
        assert_eq!(sc.enrolled.len(), 4);
        let train = sc.training_split(c.manifest(), &s);
        let trained = train.train_subjects(c.manifest());
        assert!(sc.held_out.iter().all(|h| !trained.contains(h)));
        assert!(train
            .val
            .iter()
            .all(|&i| !sc.held_out.contains(&c.manifest().instances()[i].subject_id)));
        for subj in &sc.enrolled {
            let mine: Vec<&Trial> = sc.trials.iter().filter(|t| &t.claimed == subj).collect();
            assert_eq!(mine.iter().filter(|t| t.genuine).count(), 5);
            assert_eq!(mine.iter().filter(|t| !t.genuine).count(), 35);
        }
        assert!(sc.trials.iter().all(|t| !sc.held_out.contains(&t.claimed)));
        assert_eq!(make_scenario(c.manifest(), &s, ScenarioKind::Unseen, 13).unwrap(), sc);
        let redrawn = (14..24).any(|seed| make_scenario(c.manifest(), &s, ScenarioKind::Unseen, seed).unwrap().held_out != sc.held_out);
        assert!(redrawn);
    }

    #[test]
    fn preconditions() {
        let (c, s) = split(4);
        assert!(make_scenario(c.manifest(), &s, ScenarioKind::Unseen, 0).is_err());
        assert!(make_scenario(c.manifest(), &s, ScenarioKind::Enrolled, 0).is_ok());
        assert_eq!(ScenarioKind::from_number(3), None);
    }
}
