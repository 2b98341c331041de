use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("orbit length must be at least 1")]
    EmptyOrbit,

    #[error("horizon N must be at least 1")]
    ZeroHorizon,

    #[error("external sequence too short: need {needed} samples, file has {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("orbit `{role}` too short: need {needed} samples, have {available}")]
    OrbitTooShort {
        role: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("empty window: M={m} must be smaller than N={n}")]
    EmptyWindow { m: usize, n: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("refusing {required} primitive terms (budget {budget}); use the *_with_budget variant to force")]
    CostGuard { required: u128, budget: u64 },

    #[error("no factor data for system kind `{0}`")]
    NoFactorData(String),

    #[error("naive/fast self-check failed at N={n}: naive={naive}, fast={fast}")]
    SelfCheck {
        n: usize,
        naive: Complex64,
        fast: Complex64,
    },

    #[error("failed to read external sequence: {0}")]
    Csv(#[from] csv::Error),

    #[error("failed to parse external sequence: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
