use thiserror::Error;

use crate::network::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("unknown vertex \"{0}\"")]
    UnknownVertex(String),

    #[error("invalid network: {0}")]
    Invalid(ValidationReport),

    #[error("subdivision order must be odd and positive, got {0}")]
    InvalidSubdivision(usize),

    #[error("vertices \"{0}\" and \"{1}\" are not adjacent")]
    NotAdjacent(String, String),

    #[error("path must contain at least one vertex")]
    EmptyPath,

    #[error("expected {expected} {what}, found {found}")]
    SizeMismatch { what: &'static str, expected: usize, found: usize },

    #[error("vertex signs do not map the first gauge field onto the second")]
    NotAGaugeTransform,

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("vertex \"{0}\" is not an interior vertex")]
    NotInterior(String),

    #[error("cluster configuration is not balanced: no sign-flip coloring exists")]
    NotInEvent,

    #[error("conditioning event never occurred in {0} samples")]
    EventNeverOccurred(u64),

    #[error("excursion sampler gave up after {0} rejected attempts")]
    RejectionCap(u64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
