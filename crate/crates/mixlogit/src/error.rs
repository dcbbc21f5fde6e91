//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, sampling, and I/O.
#[derive(Error, Debug)]
pub enum Error {
    /// A dimension matched neither the model layout nor its peers.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An argument was outside its valid range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A matrix that must be symmetric positive definite was not.
    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// A computation produced a non-finite value where one is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Dataset or configuration content failed validation.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
