use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// A numerical self-check on a jump kernel failed; indicates a bug.
    #[error("kernel check failed: {0}")]
    KernelCheck(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
