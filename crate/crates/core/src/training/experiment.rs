use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate_identification, labelled, class_index, train_on_split, StopReason, TrainConfig, TrainError};
use crate::dataset::{make_scenario, make_split, BreathType, DatasetManifest, FeatureBank, ScenarioKind, SplitSpec};
use crate::models::{ArchConfig, Architecture, Mode, Model, ModelConfig};
use crate::verification::{compute_centroids, compute_eer, embed_instances, score_trials, EerResult, TrialScore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub breath_type: BreathType,
    pub arch: ArchConfig,
    pub mode: Mode,
    /// `seed` is replaced by the repetition seed.
    pub train: TrainConfig,
    pub n_repetitions: usize,
    pub base_seed: u64,
    /// Also train the held-out model and report both verification scenarios.
    pub verification: bool,
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub repetition: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub eer1: Option<EerResult>,
    pub eer2: Option<EerResult>,
    pub epochs: usize,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionFailure {
    pub repetition: usize,
    pub seed: u64,
    pub error: String,
    pub numerical: bool,
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(Summary { mean, std: var.sqrt() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub breath_type: BreathType,
    pub architecture: Architecture,
    pub mode: Mode,
    pub n_repetitions: usize,
    pub repetitions: Vec<RepetitionResult>,
    pub failures: Vec<RepetitionFailure>,
    pub accuracy: Option<Summary>,
    pub eer1: Option<Summary>,
    pub eer2: Option<Summary>,
}

impl ExperimentResult {
    fn aggregate(spec: &ExperimentSpec, repetitions: Vec<RepetitionResult>, failures: Vec<RepetitionFailure>) -> Self {
        let acc: Vec<f64> = repetitions.iter().map(|r| r.accuracy).collect();
        let e1: Vec<f64> = repetitions.iter().filter_map(|r| r.eer1.as_ref().map(|e| e.eer)).collect();
        let e2: Vec<f64> = repetitions.iter().filter_map(|r| r.eer2.as_ref().map(|e| e.eer)).collect();
        Self {
            breath_type: spec.breath_type,
            architecture: spec.arch.architecture(),
            mode: spec.mode,
            n_repetitions: spec.n_repetitions,
            accuracy: Summary::of(&acc),
            eer1: Summary::of(&e1),
            eer2: Summary::of(&e2),
            repetitions,
            failures,
        }
    }
}

fn train_model(
    manifest: &DatasetManifest,
    bank: &FeatureBank,
    split: &SplitSpec,
    spec: &ExperimentSpec,
    seed: u64,
) -> Result<(Model<f32>, super::TrainHistory), TrainError> {
    let n = split.train_subjects(manifest).len();
    let mut model = Model::<f32>::new(ModelConfig::new(spec.arch.clone(), spec.mode, n), seed)?;
    let cfg = TrainConfig { seed, ..spec.train.clone() };
    let history = train_on_split(&mut model, manifest, bank, split, &cfg)?;
    Ok((model, history))
}

/// Trial scores of `model` under scenario `kind`. Centroids come from
/// `train_split.train`; probes from `full_split.test`.
pub fn scenario_scores(
    manifest: &DatasetManifest,
    bank: &FeatureBank,
    model: &Model<f32>,
    train_split: &SplitSpec,
    full_split: &SplitSpec,
    kind: ScenarioKind,
    seed: u64,
) -> Result<Vec<TrialScore>, TrainError> {
    let scenario = make_scenario(manifest, full_split, kind, seed)?;
    let mut needed: Vec<usize> = train_split.train.iter().chain(&full_split.test).copied().collect();
    needed.sort_unstable();
    needed.dedup();
    let emb = embed_instances(model, bank, &needed)?;
    let centroids = compute_centroids(manifest, &emb, &train_split.train, &scenario.enrolled)?;
    Ok(score_trials(manifest, &emb, &centroids, &scenario)?)
}

fn scenario_eer(
    manifest: &DatasetManifest,
    bank: &FeatureBank,
    model: &Model<f32>,
    train_split: &SplitSpec,
    full_split: &SplitSpec,
    kind: ScenarioKind,
    seed: u64,
) -> Result<EerResult, TrainError> {
    let scores = scenario_scores(manifest, bank, model, train_split, full_split, kind, seed)?;
    Ok(compute_eer(&scores)?)
}

/// One split/train/evaluate cycle with seed `base_seed + repetition`.
pub fn run_repetition(
    manifest: &DatasetManifest,
    bank: &FeatureBank,
    spec: &ExperimentSpec,
    repetition: usize,
) -> Result<RepetitionResult, TrainError> {
    let seed = spec.base_seed.wrapping_add(repetition as u64);
    let split = make_split(manifest, spec.breath_type, seed)?;
    let (model, history) = train_model(manifest, bank, &split, spec, seed)?;
    let classes = class_index(model.classes());
    let test = labelled(manifest, bank, &split.test, &classes)?;
    let accuracy = evaluate_identification(&model, &test)?;

    let (eer1, eer2) = if spec.verification {
        let eer1 = scenario_eer(manifest, bank, &model, &split, &split, ScenarioKind::Enrolled, seed)?;
        let scenario2 = make_scenario(manifest, &split, ScenarioKind::Unseen, seed)?;
        let reduced = scenario2.training_split(manifest, &split);
        let (model2, _) = train_model(manifest, bank, &reduced, spec, seed)?;
        let eer2 = scenario_eer(manifest, bank, &model2, &reduced, &split, ScenarioKind::Unseen, seed)?;
        (Some(eer1), Some(eer2))
    } else {
        (None, None)
    };
    Ok(RepetitionResult {
        repetition,
        seed,
        accuracy,
        eer1,
        eer2,
        epochs: history.epochs.len(),
        stop_reason: history.stop_reason,
    })
}

/// Runs every repetition, in parallel over `spec.jobs` threads when above 1.
/// Failed repetitions are reported in `failures`; summaries cover the rest.
pub fn run_experiment(
    manifest: &DatasetManifest,
    bank: &FeatureBank,
    spec: &ExperimentSpec,
) -> Result<ExperimentResult, TrainError> {
    if spec.n_repetitions == 0 {
        return Err(TrainError::Config("n_repetitions must be at least 1".into()));
    }
    spec.train.validate()?;
    if bank.breath_type != spec.breath_type {
        return Err(TrainError::Config(format!(
            "feature bank holds {} breaths, experiment asks for {}",
            bank.breath_type, spec.breath_type
        )));
    }
    let run = |i: usize| (i, run_repetition(manifest, bank, spec, i));
    let outcomes: Vec<(usize, Result<RepetitionResult, TrainError>)> = if spec.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.jobs)
            .build()
            .map_err(|e| TrainError::Config(e.to_string()))?;
        pool.install(|| (0..spec.n_repetitions).into_par_iter().map(run).collect())
    } else {
        (0..spec.n_repetitions).map(run).collect()
    };
    let mut reps = Vec::new();
    let mut failures = Vec::new();
    for (i, o) in outcomes {
        match o {
            Ok(r) => reps.push(r),
            Err(e) => failures.push(RepetitionFailure {
                repetition: i,
                seed: spec.base_seed.wrapping_add(i as u64),
                numerical: e.is_numerical(),
                error: e.to_string(),
            }),
        }
    }
    Ok(ExperimentResult::aggregate(spec, reps, failures))
}
