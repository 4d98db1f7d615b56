use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QssError {
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A configured size limit would be exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// All projection norms vanished or a similar numerical collapse.
    #[error("numerical degeneracy: {0}")]
    Numerical(String),
    /// An adversary hook failed; the run is invalid rather than aborted.
    #[error("adversary fault: {0}")]
    Adversary(String),
}

pub type Result<T, E = QssError> = std::result::Result<T, E>;

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(QssError::Contract(msg.into()))
}
