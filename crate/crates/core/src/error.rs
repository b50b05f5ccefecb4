//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("class error: {0}")]
    Class(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("search space too large: {size} candidates exceed the ceiling of {ceiling}")]
    Ceiling { size: u128, ceiling: u128 },
}

pub type Result<T> = std::result::Result<T, Error>;
