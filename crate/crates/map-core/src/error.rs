//! Error type shared by all map operations.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("ambient mismatch: point lives in {point}, map expects {expected}")]
    AmbientMismatch { point: String, expected: String },

    #[error("coordinate {index} escaped its range by {excess:.3e}")]
    DomainEscape { index: usize, excess: f64 },

    #[error("numerical inversion diverged after {iterations} iterations (residual {residual:.3e})")]
    InversionDiverged { iterations: usize, residual: f64 },

    #[error("grid too coarse: spacing {spacing:.3e} exceeds support width / 8 = {limit:.3e}")]
    GridTooCoarse { spacing: f64, limit: f64 },

    #[error("flow integration failed: {0}")]
    IntegrationFailure(String),

    #[error("unknown node kind `{0}`")]
    UnknownKind(String),

    #[error("invalid node parameters: {0}")]
    BadParams(String),

    #[error("composition requires matching ambients: {left} feeds {right}")]
    ComposeMismatch { left: String, right: String },
}

pub type Result<T> = std::result::Result<T, MapError>;
