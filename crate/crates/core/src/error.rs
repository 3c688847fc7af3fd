use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: missing columns {}", .missing.join(", "))]
    Schema { missing: Vec<String> },

    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("{what} not found; available: {}", .available.join(", "))]
    NotFound { what: String, available: Vec<String> },

    #[error("cannot impute {country}/{category}: every value is missing")]
    Unimputable { country: String, category: String },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("zero variance: the statistic is undefined for a constant field")]
    ZeroVariance,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error(
        "region ids do not match (only in geometry: [{}]; only in data: [{}])",
        .only_in_geometry.join(", "),
        .only_in_data.join(", ")
    )]
    IdMismatch {
        only_in_geometry: Vec<String>,
        only_in_data: Vec<String>,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema { .. } => 2,
            Error::Row { .. }
            | Error::Data(_)
            | Error::NotFound { .. }
            | Error::Unimputable { .. }
            | Error::Domain(_)
            | Error::Geometry(_)
            | Error::ZeroVariance
            | Error::Dimension { .. } => 3,
            Error::IdMismatch { .. } => 4,
            Error::Param(_) => 64,
            Error::File { .. } | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 1,
        }
    }
}
