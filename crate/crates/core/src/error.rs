//! Error taxonomy shared by every module in the crate.
//!
//! Three kinds cover the whole library surface: arguments outside an
//! operation's stated domain, requests for quantities that do not exist for
//! the given inputs, and numeric procedures that produced an inadmissible
//! value. The CLI maps these onto its exit codes.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A parameter violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// The requested quantity does not exist for these inputs.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numeric procedure produced a non-finite or inadmissible value.
    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
