use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unstable drift matrix: max Re(eigenvalue) = {max_real_eigenvalue:e} s^-1 (must be below {threshold:e})")]
    UnstableSystem {
        max_real_eigenvalue: f64,
        threshold: f64,
    },

    #[error("Lyapunov residual {residual:e} exceeds tolerance {tolerance:e}")]
    SolverFailure { residual: f64, tolerance: f64 },

    #[error("singular matrix")]
    Singular,

    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("unphysical covariance matrix: {0}")]
    Unphysical(String),

    #[error("truncation leakage {leakage:e} exceeds budget {budget:e}")]
    LeakageExceeded { leakage: f64, budget: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state has nonzero displacement |<b>| = {0:e}")]
    Displaced(f64),

    #[error("photon count {k} out of range for cavity truncation {n_trunc}")]
    PhotonCountOutOfRange { k: usize, n_trunc: usize },

    #[error("heralding probability for k = {k} vanishes")]
    ZeroProbability { k: usize },

    #[error("no stable drive ratio in [{lo}, {hi}]")]
    NoStablePoint { lo: f64, hi: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
