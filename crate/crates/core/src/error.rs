use thiserror::Error;

/// Errors reported by the bound and counting machinery.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is outside the operation's domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A lattice grew past a configured resource ceiling and the computation
    /// refuses to continue rather than degrade.
    #[error("resource ceiling exceeded: {0}")]
    ResourceCeiling(String),

    /// A count table does not match the basis, kind, or range it is used with.
    #[error("table mismatch: {0}")]
    TableMismatch(String),

    /// An internal invariant failed; results would be meaningless.
    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
