use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("boundary value {value:e} at node ({j}, {k}) exceeds the zero-boundary tolerance")]
    NonVanishingBoundary { j: usize, k: usize, value: f64 },

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("history too short: need at least {needed} levels, got {got}")]
    HistoryTooShort { needed: usize, got: usize },

    #[error("history incomplete: step {step} needs levels 0..{step}, got {got}")]
    HistoryIncomplete { step: usize, got: usize },

    #[error("shifted Laplacian is singular: min |σ + λ| = {0:e}")]
    SingularShift(f64),

    #[error("dense reference solver supports M <= {max}, got M = {m}")]
    TooLarge { m: usize, max: usize },

    #[error("dense elimination hit a pivot of magnitude {0:e}")]
    NearSingular(f64),

    #[error("history needs {needed} bytes, above the configured cap of {cap} bytes")]
    MemoryBudgetExceeded { needed: u64, cap: u64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}
