use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Parameters outside the admissible set; carries every violated constraint.
    #[error("domain error: {}", .0.join("; "))]
    Domain(Vec<String>),
    /// The requested computation is not defined in this exponent regime.
    #[error("regime error: {0}")]
    Regime(String),
    /// Integration, quadrature or root polishing failed.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A bracketing search could not find a sign change.
    #[error("bracket error: {0}")]
    Bracket(String),
    /// The sampled orbit is too short to answer the question asked.
    #[error("insufficient range: {0}")]
    InsufficientRange(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(vec![msg.into()])
    }
}

pub type Result<T> = std::result::Result<T, Error>;
