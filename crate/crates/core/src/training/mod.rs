//! Identification training with Adam, plateau-halving of the learning rate,
//! early stopping on validation loss, and the repeated-split experiment.

mod experiment;

pub use experiment::{
    run_experiment, run_repetition, scenario_scores, ExperimentResult, ExperimentSpec, RepetitionFailure, RepetitionResult, Summary,
};

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Adam, AutodiffError, Graph, Scalar, Tensor, WeightSet};
use crate::dataset::{DatasetError, DatasetManifest, FeatureBank, InstanceFeatures, SplitSpec};
use crate::dsp::FeatureStats;
use crate::models::{Model, ModelError};
use crate::verification::VerificationError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub lr0: f64,
    pub halvings_max: usize,
    pub plateau_patience: usize,
    pub min_delta: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            max_epochs: 1000,
            lr0: 1e-3,
            halvings_max: 4,
            plateau_patience: 10,
            min_delta: 1e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Config(m));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1".into());
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return bad(format!("lr0 {} must be positive", self.lr0));
        }
        if !(self.min_delta >= 0.0) {
            return bad(format!("min_delta {} must be non-negative", self.min_delta));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Plateau,
    MaxEpochs,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub stop_reason: StopReason,
    pub halvings: usize,
    /// Epoch whose weights were restored (1-based), 0 if none completed.
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

impl TrainHistory {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("history serializes")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("training diverged at epoch {epoch}: {msg}")]
    Diverged {
        epoch: usize,
        msg: String,
        history: Box<TrainHistory>,
    },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Verification(#[from] VerificationError),
}

impl From<AutodiffError> for TrainError {
    fn from(e: AutodiffError) -> Self {
        TrainError::Model(ModelError::Autodiff(e))
    }
}

impl TrainError {
    /// Non-finite values anywhere in the numeric pipeline.
    pub fn is_numerical(&self) -> bool {
        match self {
            TrainError::Diverged { .. } => true,
            TrainError::Model(ModelError::Autodiff(e)) => matches!(
                e,
                AutodiffError::NonFinite { .. } | AutodiffError::NonFiniteGradient { .. }
            ),
            TrainError::Verification(VerificationError::NonFinite(_)) => true,
            _ => false,
        }
    }
}

/// Features paired with class indices.
pub type LabelledSet<'a> = [(&'a InstanceFeatures, usize)];

/// Index of the largest logit; the lowest index wins ties.
pub fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

/// Accuracy of already-computed logits against labels.
pub fn accuracy_from_logits(logits: &[Vec<f64>], labels: &[usize]) -> Result<f64, TrainError> {
    if logits.is_empty() || logits.len() != labels.len() {
        return Err(TrainError::Data(format!(
            "accuracy over {} predictions and {} labels",
            logits.len(),
            labels.len()
        )));
    }
    let hits = logits.iter().zip(labels).filter(|(l, &y)| argmax(l) == y).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Mean cross-entropy and accuracy of `model` on `set`, dropout off.
pub fn evaluate<T: Scalar>(model: &Model<T>, set: &LabelledSet<'_>, batch_size: usize) -> Result<(f64, f64), TrainError> {
    if set.is_empty() {
        return Err(TrainError::Data("evaluation set is empty".into()));
    }
    let mut loss_sum = 0.0;
    let mut logits = Vec::with_capacity(set.len());
    for chunk in set.chunks(batch_size.max(1)) {
        let feats: Vec<&InstanceFeatures> = chunk.iter().map(|(f, _)| *f).collect();
        let labels: Vec<usize> = chunk.iter().map(|(_, y)| *y).collect();
        let mut g = Graph::new();
        let fwd = model.forward(&mut g, model.inputs(&feats)?, crate::models::ForwardMode::eval())?;
        let loss = g.softmax_cross_entropy(fwd.logits, &labels)?;
        loss_sum += g.value(loss).item().to_f64_lossy() * chunk.len() as f64;
        let l = g.value(fwd.logits);
        let n = l.dim(1);
        logits.extend(l.data().chunks(n).map(|r| r.iter().map(|v| v.to_f64_lossy()).collect::<Vec<f64>>()));
    }
    let labels: Vec<usize> = set.iter().map(|(_, y)| *y).collect();
    Ok((loss_sum / set.len() as f64, accuracy_from_logits(&logits, &labels)?))
}

/// Fraction of `set` whose arg-max logit is the true class.
pub fn evaluate_identification<T: Scalar>(model: &Model<T>, set: &LabelledSet<'_>) -> Result<f64, TrainError> {
    if set.is_empty() {
        return Err(TrainError::Data("identification set is empty".into()));
    }
    let feats: Vec<&InstanceFeatures> = set.iter().map(|(f, _)| *f).collect();
    let mut logits = Vec::with_capacity(set.len());
    for chunk in feats.chunks(128) {
        logits.extend(model.outputs(chunk)?.into_iter().map(|o| o.logits));
    }
    let labels: Vec<usize> = set.iter().map(|(_, y)| *y).collect();
    accuracy_from_logits(&logits, &labels)
}

fn check_labels(set: &LabelledSet<'_>, n: usize, what: &str) -> Result<(), TrainError> {
    if let Some((_, y)) = set.iter().find(|(_, y)| *y >= n) {
        return Err(TrainError::Data(format!("{what} label {y} outside {n} classes")));
    }
    Ok(())
}

/// Trains `model` in place and restores the weights of the best validation epoch.
///
/// The learning rate is halved after `plateau_patience` epochs without a
/// validation-loss improvement larger than `min_delta`; once it has been
/// halved `halvings_max` times, the next such plateau stops training.
pub fn train<T: Scalar>(
    model: &mut Model<T>,
    train_set: &LabelledSet<'_>,
    val_set: &LabelledSet<'_>,
    cfg: &TrainConfig,
) -> Result<TrainHistory, TrainError> {
    cfg.validate()?;
    let n = model.config().n_subjects;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(TrainError::Data(format!(
            "{} training and {} validation instances",
            train_set.len(),
            val_set.len()
        )));
    }
    check_labels(train_set, n, "training")?;
    check_labels(val_set, n, "validation")?;
    let mut present = vec![false; n];
    train_set.iter().for_each(|(_, y)| present[*y] = true);
    if let Some(missing) = present.iter().position(|p| !p) {
        return Err(TrainError::Data(format!("class {missing} has no training instances")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut lr = cfg.lr0;
    let mut history = TrainHistory {
        epochs: Vec::new(),
        stop_reason: StopReason::MaxEpochs,
        halvings: 0,
        best_epoch: 0,
        best_val_loss: f64::INFINITY,
    };
    let mut best_weights: Option<WeightSet> = None;
    let mut plateau_ref = f64::INFINITY;
    let mut wait = 0;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let adam = Adam::with_lr(lr);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let feats: Vec<&InstanceFeatures> = batch.iter().map(|&i| train_set[i].0).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| train_set[i].1).collect();
            let step = (|| -> Result<f64, TrainError> {
                let inputs = model.inputs(&feats)?;
                let mut g = Graph::new();
                let fwd = model.forward(&mut g, inputs, crate::models::ForwardMode::train(&mut rng))?;
                let loss = g.softmax_cross_entropy(fwd.logits, &labels)?;
                let value = g.value(loss).item().to_f64_lossy();
                let mut grads = g.backward(loss)?;
                let owned: Vec<Option<Tensor<T>>> = fwd.params.iter().map(|&v| grads.take(v)).collect();
                let refs: Vec<Option<&Tensor<T>>> = owned.iter().map(|g| g.as_ref()).collect();
                adam.step(model.params_mut(), &refs)?;
                Ok(value)
            })();
            match step {
                Ok(v) if v.is_finite() => loss_sum += v * batch.len() as f64,
                Ok(v) => return Err(diverged(epoch, format!("training loss {v}"), history)),
                Err(e) if e.is_numerical() => return Err(diverged(epoch, e.to_string(), history)),
                Err(e) => return Err(e),
            }
        }
        let train_loss = loss_sum / train_set.len() as f64;
        let (val_loss, val_accuracy) = match evaluate(model, val_set, cfg.batch_size) {
            Ok((l, _)) if !l.is_finite() => return Err(diverged(epoch, format!("validation loss {l}"), history)),
            Ok(r) => r,
            Err(e) if e.is_numerical() => return Err(diverged(epoch, e.to_string(), history)),
            Err(e) => return Err(e),
        };
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_accuracy,
            lr,
        });
        if val_loss < history.best_val_loss {
            history.best_val_loss = val_loss;
            history.best_epoch = epoch;
            best_weights = Some(WeightSet::capture(model.params()));
        }
        if val_loss < plateau_ref - cfg.min_delta {
            plateau_ref = val_loss;
            wait = 0;
        } else {
            wait += 1;
        }
        if wait >= cfg.plateau_patience {
            if history.halvings < cfg.halvings_max {
                lr /= 2.0;
                history.halvings += 1;
                wait = 0;
            } else {
                history.stop_reason = StopReason::Plateau;
                break;
            }
        }
    }
    if let Some(w) = best_weights {
        w.restore(model.params_mut())?;
    }
    model.mark_trained();
    Ok(history)
}

fn diverged(epoch: usize, msg: String, mut history: TrainHistory) -> TrainError {
    history.stop_reason = StopReason::Diverged;
    TrainError::Diverged {
        epoch,
        msg,
        history: Box::new(history),
    }
}

/// Class index of each subject: position in the sorted list of training subjects.
pub fn class_index(subjects: &[String]) -> BTreeMap<String, usize> {
    subjects.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect()
}

/// Looks up features and labels for manifest indices. Instances of subjects
/// without a class are an error.
pub fn labelled<'a>(
    manifest: &DatasetManifest,
    bank: &'a FeatureBank,
    indices: &[usize],
    classes: &BTreeMap<String, usize>,
) -> Result<Vec<(&'a InstanceFeatures, usize)>, TrainError> {
    let feats = bank.select(indices)?;
    indices
        .iter()
        .zip(feats)
        .map(|(&i, f)| {
            let r = &manifest.instances()[i];
            let y = classes
                .get(&r.subject_id)
                .ok_or_else(|| TrainError::Data(format!("instance {} has no class", r.id())))?;
            Ok((f, *y))
        })
        .collect()
}

/// Standardisation statistics pooled over the training partition.
pub fn fit_stats(bank: &FeatureBank, train: &[usize]) -> Result<(FeatureStats, FeatureStats), TrainError> {
    let feats = bank.select(train)?;
    let audio: Vec<_> = feats.iter().map(|f| &f.audio).collect();
    let motion: Vec<_> = feats.iter().map(|f| &f.motion).collect();
    let err = |e: crate::dsp::DspError| TrainError::Data(e.to_string());
    Ok((FeatureStats::fit(&audio).map_err(err)?, FeatureStats::fit(&motion).map_err(err)?))
}

/// Fits standardisation on `split.train`, then trains on it with `split.val`
/// for early stopping. Classes are the sorted training subjects.
pub fn train_on_split<T: Scalar>(
    model: &mut Model<T>,
    manifest: &DatasetManifest,
    bank: &FeatureBank,
    split: &SplitSpec,
    cfg: &TrainConfig,
) -> Result<TrainHistory, TrainError> {
    let subjects = split.train_subjects(manifest);
    if subjects.len() != model.config().n_subjects {
        return Err(TrainError::Data(format!(
            "split has {} training subjects, model has {} outputs",
            subjects.len(),
            model.config().n_subjects
        )));
    }
    let classes = class_index(&subjects);
    let (a, m) = fit_stats(bank, &split.train)?;
    model.set_stats(a, m)?;
    model.set_classes(subjects)?;
    let train_set = labelled(manifest, bank, &split.train, &classes)?;
    let val_set = labelled(manifest, bank, &split.val, &classes)?;
    train(model, &train_set, &val_set, cfg)
}
