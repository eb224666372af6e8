use omcat_core::Error as CoreError;

/// Failure classes, one per process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config or input files. Exit 1.
    #[error("{0}")]
    Usage(String),
    /// The physics has no valid answer, e.g. an unstable drive. Exit 2.
    #[error("{0}")]
    Physics(String),
    /// An approximation is used outside its regime. Exit 3.
    #[error("{0}")]
    Validity(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Physics(_) => 2,
            CliError::Validity(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::UnstableSystem { .. }
            | CoreError::NoStablePoint { .. }
            | CoreError::SolverFailure { .. }
            | CoreError::Singular
            | CoreError::NotPositiveDefinite { .. }
            | CoreError::Unphysical(_)
            | CoreError::ZeroProbability { .. } => CliError::Physics(msg),
            CoreError::LeakageExceeded { .. } => CliError::Validity(msg),
            CoreError::InvalidParameter { .. }
            | CoreError::DimensionMismatch { .. }
            | CoreError::Displaced(_)
            | CoreError::PhotonCountOutOfRange { .. } => CliError::Usage(msg),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(format!("json: {e}"))
    }
}
