use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("state holds {got} atoms but the parameters describe {expected}")]
    ArityMismatch { expected: usize, got: usize },

    #[error(
        "noise covariance is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})"
    )]
    NotPsd { min_eigenvalue: f64 },

    #[error("non-finite state at t = {t} ({what})")]
    NonFinite { t: f64, what: &'static str },

    #[error("{0} is outside the domain of this closed form")]
    OutOfDomain(&'static str),

    #[error("fit needs at least {needed} usable points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("schema version {found} in {path} does not match expected {expected}")]
    SchemaVersion {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("unexpected CSV header in {path}: {header}")]
    CsvHeader { path: PathBuf, header: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}
