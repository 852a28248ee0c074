use thiserror::Error;

/// Library error type. Variants map onto the CLI exit codes: config and
/// parameter problems are validation errors, solver grid refusals and
/// calibration failures are reported separately so callers can distinguish
/// "bad input" from "model could not reach the target".
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("grid refused: {0}")]
    Grid(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
