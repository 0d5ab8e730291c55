//! Prototype verification: per-subject centroid embeddings, Euclidean trial
//! scores, the strict `distance < ε` accept rule and the equal error rate.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::Scalar;
use crate::dataset::{DatasetManifest, FeatureBank, VerificationScenario};
use crate::models::{Model, ModelError};

/// Embeddings keyed by manifest index.
pub type EmbeddingTable = BTreeMap<usize, Vec<f64>>;

const EMBED_BATCH: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub subject_id: String,
    pub vector: Vec<f64>,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialScore {
    pub claimed_subject: String,
    pub instance: String,
    pub distance: f64,
    pub genuine: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EerResult {
    pub eer: f64,
    pub threshold: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub n_genuine: usize,
    pub n_impostor: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, thiserror::Error)]
pub enum VerificationError {
    #[error("subject {0} has no enrollment instances")]
    EmptySupport(String),
    #[error("no centroid for claimed subject {0}")]
    MissingCentroid(String),
    #[error("no embedding for instance {0}")]
    MissingEmbedding(String),
    #[error("EER needs at least one genuine and one impostor score ({genuine} genuine, {impostor} impostor)")]
    EmptyClass { genuine: usize, impostor: usize },
    #[error("embedding dimensions differ: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("non-finite score for {0}")]
    NonFinite(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Accepts iff `distance(embedding, centroid) < epsilon`.
pub fn verify(embedding: &[f64], centroid: &Centroid, epsilon: f64) -> Decision {
    if euclidean(embedding, &centroid.vector) < epsilon {
        Decision::Accept
    } else {
        Decision::Reject
    }
}

/// Embeds the listed instances in fixed-size batches.
pub fn embed_instances<T: Scalar>(
    model: &Model<T>,
    bank: &FeatureBank,
    indices: &[usize],
) -> Result<EmbeddingTable, VerificationError> {
    let feats = bank
        .select(indices)
        .map_err(|e| VerificationError::MissingEmbedding(e.to_string()))?;
    let mut out = EmbeddingTable::new();
    for (chunk_idx, chunk) in indices.chunks(EMBED_BATCH).zip(feats.chunks(EMBED_BATCH)) {
        let emb = model.embed_batch(chunk)?;
        out.extend(chunk_idx.iter().copied().zip(emb));
    }
    Ok(out)
}

/// Mean embedding of each enrolled subject's instances among `support`.
/// Instances are summed in instance-id order so the result does not depend on
/// the order of `support`.
pub fn compute_centroids(
    manifest: &DatasetManifest,
    embeddings: &EmbeddingTable,
    support: &[usize],
    enrolled: &[String],
) -> Result<Vec<Centroid>, VerificationError> {
    let records = manifest.instances();
    let mut sorted = support.to_vec();
    sorted.sort_by(|&a, &b| records[a].id().cmp(records[b].id()));
    sorted.dedup();
    enrolled
        .iter()
        .map(|subject| {
            let mut sum: Option<Vec<f64>> = None;
            let mut n = 0;
            for &i in sorted.iter().filter(|&&i| &records[i].subject_id == subject) {
                let e = embeddings
                    .get(&i)
                    .ok_or_else(|| VerificationError::MissingEmbedding(records[i].id().to_string()))?;
                match &mut sum {
                    None => sum = Some(e.clone()),
                    Some(s) => {
                        if s.len() != e.len() {
                            return Err(VerificationError::Dimension(s.len(), e.len()));
                        }
                        s.iter_mut().zip(e).for_each(|(a, b)| *a += b);
                    }
                }
                n += 1;
            }
            let mut vector = sum.ok_or_else(|| VerificationError::EmptySupport(subject.clone()))?;
            vector.iter_mut().for_each(|v| *v /= n as f64);
            Ok(Centroid {
                subject_id: subject.clone(),
                vector,
                support: n,
            })
        })
        .collect()
}

pub fn score_trials(
    manifest: &DatasetManifest,
    embeddings: &EmbeddingTable,
    centroids: &[Centroid],
    scenario: &VerificationScenario,
) -> Result<Vec<TrialScore>, VerificationError> {
    let by_subject: BTreeMap<&str, &Centroid> = centroids.iter().map(|c| (c.subject_id.as_str(), c)).collect();
    scenario
        .trials
        .iter()
        .map(|t| {
            let c = by_subject
                .get(t.claimed.as_str())
                .ok_or_else(|| VerificationError::MissingCentroid(t.claimed.clone()))?;
            let id = manifest.instances()[t.instance].id().to_string();
            let e = embeddings
                .get(&t.instance)
                .ok_or_else(|| VerificationError::MissingEmbedding(id.clone()))?;
            if e.len() != c.vector.len() {
                return Err(VerificationError::Dimension(e.len(), c.vector.len()));
            }
            let distance = euclidean(e, &c.vector);
            if !distance.is_finite() {
                return Err(VerificationError::NonFinite(id));
            }
            Ok(TrialScore {
                claimed_subject: t.claimed.clone(),
                instance: id,
                distance,
                genuine: t.genuine,
            })
        })
        .collect()
}

/// Candidate thresholds: the smallest score, midpoints between consecutive
/// distinct scores, and the float just above the largest score.
fn candidates(sorted_distinct: &[f64]) -> Vec<f64> {
    let mut c = Vec::with_capacity(sorted_distinct.len() + 1);
    c.push(sorted_distinct[0]);
    for w in sorted_distinct.windows(2) {
        c.push((w[0] + w[1]) / 2.0);
    }
    c.push(sorted_distinct[sorted_distinct.len() - 1].next_up());
    c
}

/// `(FPR, FNR)` at a fixed threshold, e.g. one chosen on validation scores.
pub fn error_rates(scores: &[TrialScore], epsilon: f64) -> Result<(f64, f64), VerificationError> {
    let ng = scores.iter().filter(|s| s.genuine).count();
    let ni = scores.len() - ng;
    if ng == 0 || ni == 0 {
        return Err(VerificationError::EmptyClass { genuine: ng, impostor: ni });
    }
    let fp = scores.iter().filter(|s| !s.genuine && s.distance < epsilon).count();
    let fneg = scores.iter().filter(|s| s.genuine && s.distance >= epsilon).count();
    Ok((fp as f64 / ni as f64, fneg as f64 / ng as f64))
}

/// `FPR(ε)` = impostors with distance `< ε`, `FNR(ε)` = genuines with distance `≥ ε`.
/// Picks the candidate minimising `|FPR - FNR|` (smallest ε on ties) and
/// reports their mean there.
pub fn compute_eer(scores: &[TrialScore]) -> Result<EerResult, VerificationError> {
    let mut genuine: Vec<f64> = scores.iter().filter(|s| s.genuine).map(|s| s.distance).collect();
    let mut impostor: Vec<f64> = scores.iter().filter(|s| !s.genuine).map(|s| s.distance).collect();
    if genuine.is_empty() || impostor.is_empty() {
        return Err(VerificationError::EmptyClass {
            genuine: genuine.len(),
            impostor: impostor.len(),
        });
    }
    if let Some(s) = scores.iter().find(|s| !s.distance.is_finite()) {
        return Err(VerificationError::NonFinite(s.instance.clone()));
    }
    genuine.sort_by(f64::total_cmp);
    impostor.sort_by(f64::total_cmp);
    let mut all: Vec<f64> = genuine.iter().chain(&impostor).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let (ng, ni) = (genuine.len() as f64, impostor.len() as f64);
    let (mut gi, mut ii) = (0usize, 0usize);
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for eps in candidates(&all) {
        // counts of scores strictly below eps; thresholds ascend, so the cursors only move forward
        while gi < genuine.len() && genuine[gi] < eps {
            gi += 1;
        }
        while ii < impostor.len() && impostor[ii] < eps {
            ii += 1;
        }
        let fpr = ii as f64 / ni;
        let fnr = (genuine.len() - gi) as f64 / ng;
        let gap = (fpr - fnr).abs();
        if best.map_or(true, |b| gap < b.0) {
            best = Some((gap, eps, fpr, fnr));
        }
    }
    let (_, threshold, fpr, fnr) = best.expect("at least two candidates");
    Ok(EerResult {
        eer: (fpr + fnr) / 2.0,
        threshold,
        fpr,
        fnr,
        n_genuine: genuine.len(),
        n_impostor: impostor.len(),
    })
}

/// CSV with header `claimed_subject,genuine,distance`.
pub fn write_scores_csv(path: &Path, scores: &[TrialScore]) -> Result<(), VerificationError> {
    let err = |e: std::io::Error| VerificationError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    };
    let mut out = BufWriter::new(File::create(path).map_err(err)?);
    writeln!(out, "claimed_subject,genuine,distance").map_err(err)?;
    for s in scores {
        writeln!(out, "{},{},{}", s.claimed_subject, s.genuine, s.distance).map_err(err)?;
    }
    out.flush().map_err(err)
}
