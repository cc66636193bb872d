use std::path::PathBuf;

use crate::sampling::RejectionReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("deletion set would remove all {0} training points")]
    DeletesEverything(usize),

    #[error(
        "rejection sampling exhausted after {} attempts with {} of {requested} samples accepted",
        partial.attempts,
        partial.accepted
    )]
    Exhausted {
        requested: usize,
        partial: RejectionReport,
    },

    #[error("null calibration: {0}")]
    Calibration(String),

    #[error("config: {0}")]
    Config(String),

    #[error("cannot read {}: {source}", path.display())]
    ReadFile {
        path: PathBuf,
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
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Whether the error stems from user input (config values, arguments)
    /// rather than from a failure while running.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::Config(_)
                | Error::ReadFile { .. }
                | Error::Json(_)
                | Error::Calibration(_)
        )
    }
}
