use std::path::PathBuf;

use thiserror::Error;

use crate::fock::StateReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("truncation level {0} is below the minimum of 2")]
    InvalidTruncation(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode index {index} out of range for a {modes}-mode space")]
    ModeIndex { index: usize, modes: usize },

    #[error("occupation {occupation} of mode {mode} is outside truncation {truncation}")]
    OccupationOutOfRange {
        mode: usize,
        occupation: usize,
        truncation: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "population {population:.3e} on the top level of mode {mode} at t = {time:.4e} s exceeds \
         leakage tolerance {tolerance:.1e}; raise the truncation for this mode"
    )]
    Leakage {
        time: f64,
        mode: usize,
        population: f64,
        tolerance: f64,
    },

    #[error("density-matrix invariant violated at t = {time:.4e} s ({report}); reduce dt")]
    InvariantViolation { time: f64, report: StateReport },

    #[error("singular value decomposition did not converge")]
    SvdFailed,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors caused by the user's input rather than by the physics.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidTruncation(_)
        )
    }
}
