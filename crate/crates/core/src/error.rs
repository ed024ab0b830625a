// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Errors produced by the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("insufficient pool: need {needed} candidates, only {available} available")]
    InsufficientPool { needed: usize, available: usize },

    #[error("both classes are required: {0}")]
    SingleClass(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("malformed dataset: {0}")]
    Format(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("wrong phase: expected {expected}, session is {found}")]
    WrongPhase { expected: String, found: String },

    #[error("unsupported state version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
