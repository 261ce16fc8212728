use std::path::PathBuf;

use crate::model::{SplitReport, Violation};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Syntax-level problem in an input file.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Well-formed input whose content breaks a data invariant.
    #[error("line {line}: {message}")]
    Content { line: usize, message: String },

    #[error("dataset is invalid: {}", summarize(.0))]
    InvalidDataset(Vec<Violation>),

    #[error("split file: {0}")]
    Split(String),

    #[error("predictions: {0}")]
    Predictions(String),

    #[error("degenerate split: partition {0} is empty")]
    DegenerateSplit(&'static str),

    #[error("infeasible split: {reason}")]
    Infeasible {
        reason: String,
        best_report: Option<Box<SplitReport>>,
        best_objective: Option<f64>,
    },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error("{0}")]
    Domain(String),

    #[error("mA undefined: every attribute lacks positives or negatives in the evaluated subset")]
    UndefinedMeanAccuracy,

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}

fn summarize(violations: &[Violation]) -> String {
    let shown: Vec<String> = violations.iter().take(5).map(|v| v.to_string()).collect();
    let mut out = shown.join("; ");
    if violations.len() > 5 {
        out.push_str(&format!(" (+{} more)", violations.len() - 5));
    }
    out
}
