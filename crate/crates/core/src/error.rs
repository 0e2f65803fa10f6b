use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("atomic variables outside the Bloch disk: Q²+P² = {r2} (limit {limit})")]
    Domain { r2: f64, limit: f64 },

    #[error("energy {epsilon} is not above the classical ground-state energy {ground}")]
    BelowGroundState { epsilon: f64, ground: f64 },

    #[error("bosonic truncation too small: coherent-state tail weight {tail:e} exceeds {limit:e}")]
    Truncation { tail: f64, limit: f64 },

    #[error("eigensolver failed to converge")]
    EigenSolver,

    #[error("parity expectation {expectation} of level {level} is not ±1 (truncation mixing)")]
    ParityMixing { level: usize, expectation: f64 },

    #[error("shell sample is empty")]
    EmptySample,

    #[error("shell average vanished; dimensionality is undefined")]
    ZeroAverage,

    #[error("coherent-state width vanished at a sample point")]
    ZeroWidth,

    #[error("energy profile extends beyond the converged spectrum (lost mass {lost_mass:e})")]
    ProfileOutsideWindow { lost_mass: f64 },

    #[error("energy window [{lo}, {hi}] is outside the converged spectrum")]
    WindowNotConverged { lo: f64, hi: f64 },

    #[error("energy window [{lo}, {hi}] contains no eigenstates")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("all random-state weights vanished")]
    ZeroWeights,

    #[error("{0}")]
    InvalidArgument(String),

    #[error("cache entry {path} is corrupt: {reason}")]
    CacheCorrupt { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
