//! Construction-stage errors.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Map(#[from] map_core::MapError),

    #[error("invalid parameters: {0}")]
    BadParams(String),

    #[error("construction failed: {0}")]
    ConstructionFailure(String),

    #[error("tower discs overlap: minimal center gap {min_gap:.3e} <= 2ρ = {two_rho:.3e} at step {step}")]
    TowerOverlap { min_gap: f64, two_rho: f64, step: u64 },

    #[error(
        "no feasible (A, q) below ceiling 2^{ceiling_log2}: window needs A ≈ 10^{log10_a_star:.1} \
         (A* solves {formula})"
    )]
    InfeasibleBudget { log10_a_star: f64, ceiling_log2: u32, formula: String },

    #[error("factor support violation: factor {index} reaches |u| = {reach:.6} > {limit:.6}")]
    SupportViolation { index: usize, reach: f64, limit: f64 },

    #[error("orbit escaped the tower at step {step}: {detail}")]
    OrbitEscape { step: u64, detail: String },
}

pub type Result<T> = std::result::Result<T, BuildError>;
