//! Construction, verification and simulation of parallelized code surgery,
//! locally-testable resource-state preparation and teleported parity-check
//! measurement for CSS codes, all at desk scale over GF(2).

pub mod codes;
pub mod compile;
pub mod gf2;
pub mod ledger;
pub mod ltsp;
pub mod manifest;
pub mod protocol;
pub mod sim;
pub mod state;
pub mod surgery;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("search too large: {what} (size {size}, cap {cap})")]
    SearchTooLarge { what: String, size: usize, cap: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("construction failed: {0}")]
    ConstructionFailed(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
