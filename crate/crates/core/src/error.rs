use std::io;

use thiserror::Error;

/// Errors produced by the simulator and the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range. `field` names the
    /// parameter as it appears on the command line.
    #[error("invalid {field}: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("no stability change for K = {k} in a ∈ (0, 1)")]
    NoSignChange { k: u32 },

    #[error("stability indicator is not monotone in a near a = {a}")]
    NonMonotone { a: f64 },

    #[error("clipped mass {clipped:e} exceeds limit {limit:e} at t = {t}; reduce dt")]
    StepTooLarge { clipped: f64, limit: f64, t: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed input at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParam { .. } | Error::Parse { .. } | Error::InsufficientData(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
