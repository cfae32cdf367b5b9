use thiserror::Error;

/// Errors produced by the caching library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Input violates a structural invariant (r-vector, chain, config, demand).
    #[error("validation error: {0}")]
    Validation(String),

    /// Exact integer arithmetic would have wrapped.
    #[error("arithmetic overflow while computing {0}")]
    Overflow(&'static str),

    /// A configured size limit was exceeded.
    #[error("resource limit exceeded: {0}")]
    Limit(String),

    /// The operation only exists for a specific configuration.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Exhaustive search ran out of budget.
    #[error("search budget exhausted: {0}")]
    Infeasible(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
