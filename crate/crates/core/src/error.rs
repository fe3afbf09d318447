use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),
    #[error("invalid confidence: {0}")]
    InvalidConfidence(String),
    #[error("degenerate truncation: interval mass {mass:e} is below 1e-12")]
    DegenerateTruncation { mass: f64 },
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("empty region: the constraint set has no feasible point")]
    EmptyRegion,
    #[error("empty DR core: no allocation satisfies efficiency and every coalition bound")]
    EmptyCore,
    #[error("internal consistency error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
