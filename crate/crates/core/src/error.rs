use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("demand is outside the service rate region")]
    NotInRegion,

    #[error("unsupported parameters: {0}")]
    UnsupportedParameters(String),

    #[error("outside the closed-form domain: {0}")]
    OutOfDomain(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("linear program solver failure: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
