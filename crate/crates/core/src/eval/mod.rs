//! Ground-truth evaluation, stability statistics and runtime scaling.

mod bench;
mod synth;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discussion::{score_discussion, DiscussionError, ScoreOptions};
use crate::ingest::{read_records, IngestError, MaxChars, ParseMode};

pub use bench::{benchmark_scaling, linear_fit, synthetic_corpus, ScalingPoint, ScalingReport};
pub use synth::{generate_discussion, Side, SynthDiscussion, SynthParams};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("AUC needs at least one discussion of each ground-truth class")]
    OneClassOnly,
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Discussion(#[from] DiscussionError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTruth {
    Controversial,
    NonControversial,
}

impl std::str::FromStr for GroundTruth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "controversial" | "1" | "true" => Ok(Self::Controversial),
            "non_controversial" | "noncontroversial" | "0" | "false" => Ok(Self::NonControversial),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

/// How a discussion's score was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreOutcome {
    Scored,
    /// Failed the applicability rule; scored 0.
    NotApplicable,
    /// Too small after pruning; scored 0.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledScore {
    pub id: String,
    pub dmc: f64,
    pub ground_truth: GroundTruth,
    pub outcome: ScoreOutcome,
}

impl LabeledScore {
    pub fn new(id: impl Into<String>, dmc: f64, ground_truth: GroundTruth) -> Self {
        Self {
            id: id.into(),
            dmc,
            ground_truth,
            outcome: ScoreOutcome::Scored,
        }
    }
}

/// Mann–Whitney AUC: the fraction of (controversial, non-controversial)
/// pairs ordered correctly, ties counting one half.
pub fn auc_roc(scores: &[LabeledScore]) -> Result<f64, EvalError> {
    let pos: Vec<f64> = scores
        .iter()
        .filter(|s| s.ground_truth == GroundTruth::Controversial)
        .map(|s| s.dmc)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .filter(|s| s.ground_truth == GroundTruth::NonControversial)
        .map(|s| s.dmc)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(EvalError::OneClassOnly);
    }
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (pos.len() * neg.len()) as f64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: GroundTruth,
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    path: String,
    label: String,
}

/// Reads a `path,label` CSV with a header row. Relative paths resolve
/// against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, EvalError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| manifest_error(0, e))?;
    let mut entries = Vec::new();
    for (idx, row) in reader.deserialize::<ManifestRow>().enumerate() {
        let line = idx + 2;
        let row = row.map_err(|e| manifest_error(line, e))?;
        let label = row
            .label
            .parse()
            .map_err(|message| EvalError::Manifest { line, message })?;
        let p = PathBuf::from(&row.path);
        entries.push(ManifestEntry {
            path: if p.is_absolute() { p } else { base.join(p) },
            label,
        });
    }
    Ok(entries)
}

fn manifest_error(line: usize, e: csv::Error) -> EvalError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => EvalError::Io(io),
        other => EvalError::Manifest {
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Scores one discussion file, mapping the applicability and size guards to
/// a zero score.
pub fn score_file(
    path: &Path,
    label: GroundTruth,
    max_chars: MaxChars,
    options: &ScoreOptions,
) -> Result<LabeledScore, EvalError> {
    let records = read_records(path, max_chars, ParseMode::Lenient)?.records;
    let id = path.display().to_string();
    let (dmc, outcome) = match score_discussion(&records, options) {
        Ok(report) => (report.dmc_mean, ScoreOutcome::Scored),
        Err(DiscussionError::NotApplicable(_)) => (0.0, ScoreOutcome::NotApplicable),
        Err(e) if e.is_degenerate() => (0.0, ScoreOutcome::Degenerate),
        Err(e) => return Err(e.into()),
    };
    Ok(LabeledScore {
        id,
        dmc,
        ground_truth: label,
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auc: f64,
    pub scores: Vec<LabeledScore>,
}

/// Scores every manifest entry and computes the AUC.
pub fn evaluate_manifest(
    entries: &[ManifestEntry],
    max_chars: MaxChars,
    options: &ScoreOptions,
) -> Result<EvalReport, EvalError> {
    let scores = entries
        .iter()
        .map(|e| score_file(&e.path, e.label, max_chars, options))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport {
        auc: auc_roc(&scores)?,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn labeled(pos: &[f64], neg: &[f64]) -> Vec<LabeledScore> {
        pos.iter()
            .map(|&d| LabeledScore::new("p", d, GroundTruth::Controversial))
            .chain(
                neg.iter()
                    .map(|&d| LabeledScore::new("n", d, GroundTruth::NonControversial)),
            )
            .collect()
    }

    #[test]
    fn perfect_separation() {
        assert_eq!(auc_roc(&labeled(&[0.8, 0.9], &[0.1, 0.2])).unwrap(), 1.0);
    }

    #[test]
    fn all_ties() {
        assert_eq!(auc_roc(&labeled(&[0.5, 0.5], &[0.5, 0.5, 0.5])).unwrap(), 0.5);
    }

    #[test]
    fn three_of_four_pairs() {
        assert_eq!(auc_roc(&labeled(&[0.7, 0.4], &[0.5, 0.2])).unwrap(), 0.75);
    }

    #[test]
    fn one_class_is_an_error() {
        assert!(matches!(auc_roc(&labeled(&[0.3], &[])), Err(EvalError::OneClassOnly)));
        assert!(matches!(auc_roc(&[]), Err(EvalError::OneClassOnly)));
    }

    #[test]
    fn manifest_paths_resolve_relative_to_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "path,label\na.jsonl,controversial\n/abs/b.jsonl, non_controversial").unwrap();
        let entries = read_manifest(&path).unwrap();
        assert_eq!(entries[0].path, dir.path().join("a.jsonl"));
        assert_eq!(entries[1].path, PathBuf::from("/abs/b.jsonl"));
        assert_eq!(entries[1].label, GroundTruth::NonControversial);
    }

    #[test]
    fn manifest_rejects_unknown_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "path,label\na.jsonl,maybe\n").unwrap();
        assert!(matches!(read_manifest(&path), Err(EvalError::Manifest { line: 2, .. })));
    }
}
