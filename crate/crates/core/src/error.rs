use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    Singular { pivot: usize, value: f64 },

    #[error("degenerate gradient: norm {norm:e} is below the zero threshold")]
    DegenerateGradient { norm: f64 },

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("unfair-map attack produced a non-finite iterate at step {step}")]
    AttackDivergence { step: usize },

    #[error("metric is undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("row {row} has no synthetic provenance")]
    MissingProvenance { row: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("audit failed on {} row(s): {}", .0.len(), summarize_rows(.0))]
    Rows(Vec<(usize, Error)>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn summarize_rows(rows: &[(usize, Error)]) -> String {
    rows.iter()
        .take(5)
        .map(|(row, err)| format!("row {row}: {err}"))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Divergence { .. } | Error::AttackDivergence { .. } | Error::Singular { .. } => 3,
            Error::Rows(rows) if rows.iter().any(|(_, e)| e.exit_code() == 3) => 3,
            _ => 2,
        }
    }
}
