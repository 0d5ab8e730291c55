//! Summary CSV rows and the aggregated report tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{io_err, CliError};
use crate::dataset::BreathType;
use crate::models::{Architecture, Mode};
use crate::training::{ExperimentResult, Summary};

pub const SUMMARY_HEADER: &str =
    "breath_type,architecture,mode,n_repetitions,accuracy_mean,accuracy_std,eer1_mean,eer1_std,eer2_mean,eer2_std";

/// One (breath type, architecture, mode) result. Missing metrics are empty cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub breath_type: BreathType,
    pub architecture: Architecture,
    pub mode: Mode,
    pub n_repetitions: usize,
    pub accuracy_mean: Option<f64>,
    pub accuracy_std: Option<f64>,
    pub eer1_mean: Option<f64>,
    pub eer1_std: Option<f64>,
    pub eer2_mean: Option<f64>,
    pub eer2_std: Option<f64>,
}

impl SummaryRow {
    pub fn new(
        breath_type: BreathType,
        architecture: Architecture,
        mode: Mode,
        n_repetitions: usize,
        accuracy: Option<Summary>,
        eer1: Option<Summary>,
        eer2: Option<Summary>,
    ) -> Self {
        Self {
            breath_type,
            architecture,
            mode,
            n_repetitions,
            accuracy_mean: accuracy.map(|s| s.mean),
            accuracy_std: accuracy.map(|s| s.std),
            eer1_mean: eer1.map(|s| s.mean),
            eer1_std: eer1.map(|s| s.std),
            eer2_mean: eer2.map(|s| s.mean),
            eer2_std: eer2.map(|s| s.std),
        }
    }

    pub fn from_result(r: &ExperimentResult) -> Self {
        Self::new(r.breath_type, r.architecture, r.mode, r.n_repetitions, r.accuracy, r.eer1, r.eer2)
    }

    fn metric(&self, m: Metric) -> (Option<f64>, Option<f64>) {
        match m {
            Metric::Accuracy => (self.accuracy_mean, self.accuracy_std),
            Metric::Eer1 => (self.eer1_mean, self.eer1_std),
            Metric::Eer2 => (self.eer2_mean, self.eer2_std),
        }
    }
}

pub(super) fn write_summaries(path: &Path, rows: &[SummaryRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_summaries(paths: &[PathBuf]) -> Result<Vec<SummaryRow>, CliError> {
    let mut rows = Vec::new();
    for p in paths {
        let mut r = csv::Reader::from_path(p).map_err(|e| io_err(p, e))?;
        let header: Vec<String> = r
            .headers()
            .map_err(|e| io_err(p, e))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.join(",") != SUMMARY_HEADER {
            return Err(CliError::data(format!("{}: not a summary CSV", p.display())));
        }
        for row in r.deserialize() {
            rows.push(row.map_err(|e| io_err(p, e))?);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy)]
enum Metric {
    Accuracy,
    Eer1,
    Eer2,
}

fn slot<T: PartialEq>(all: &[T], v: &T) -> usize {
    all.iter().position(|x| x == v).unwrap_or(all.len())
}

/// Markdown tables, one per metric and architecture: breath types down, modes across.
/// When several rows share a key the last one is shown.
pub fn render_report(rows: &[SummaryRow]) -> String {
    let mut cells: BTreeMap<(usize, usize, usize), &SummaryRow> = BTreeMap::new();
    for r in rows {
        let key = (
            slot(&Architecture::ALL, &r.architecture),
            slot(&BreathType::ALL, &r.breath_type),
            slot(&Mode::ALL, &r.mode),
        );
        cells.insert(key, r);
    }
    let mut out = String::new();
    for (metric, title) in [
        (Metric::Accuracy, "Identification accuracy"),
        (Metric::Eer1, "EER, scenario 1 (enrolled impostors)"),
        (Metric::Eer2, "EER, scenario 2 (unseen impostors)"),
    ] {
        for (ai, arch) in Architecture::ALL.iter().enumerate() {
            let present: Vec<_> = cells.iter().filter(|((a, _, _), _)| *a == ai).collect();
            if present.is_empty() || present.iter().all(|(_, r)| r.metric(metric).0.is_none()) {
                continue;
            }
            let _ = writeln!(out, "## {title}: {arch}\n");
            let modes: Vec<Mode> = Mode::ALL
                .iter()
                .copied()
                .filter(|m| present.iter().any(|((_, _, mi), _)| *mi == slot(&Mode::ALL, m)))
                .collect();
            let names: Vec<&str> = modes.iter().map(|m| m.as_str()).collect();
            let _ = writeln!(out, "| breath | {} |", names.join(" | "));
            let _ = writeln!(out, "|---|{}", "---|".repeat(modes.len()));
            for (bi, bt) in BreathType::ALL.iter().enumerate() {
                if !present.iter().any(|((_, b, _), _)| *b == bi) {
                    continue;
                }
                let row: Vec<String> = modes
                    .iter()
                    .map(|m| match cells.get(&(ai, bi, slot(&Mode::ALL, m))) {
                        Some(r) => match r.metric(metric) {
                            (Some(mean), Some(std)) => format!("{mean:.4} ± {std:.4}"),
                            (Some(mean), None) => format!("{mean:.4}"),
                            _ => "-".into(),
                        },
                        None => "-".into(),
                    })
                    .collect();
                let _ = writeln!(out, "| {bt} | {} |", row.join(" | "));
            }
            out.push('\n');
        }
    }
    out
}
