use std::io;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Variants fall into two families that callers usually want to tell apart:
/// bad input data ([`ErrorKind::Data`]) and well-formed input on which a
/// statistic is mathematically undefined ([`ErrorKind::Degenerate`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("too many malformed records: {malformed} of {lines} lines (budget {budget}); first over budget at line {line}: {message}")]
    ErrorBudget {
        malformed: usize,
        lines: usize,
        budget: usize,
        line: usize,
        message: String,
    },

    #[error("duplicate subcategory `{0}`")]
    DuplicateSubcategory(String),

    #[error("class `{0}` has no subcategories")]
    EmptyClass(String),

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("class `{0}` is declared in more than one block; subcategories of a class must be contiguous")]
    NonContiguousClass(String),

    #[error("unknown subcategory `{0}`")]
    UnknownSubcategory(String),

    #[error("area `{0}` has no check-ins")]
    EmptyArea(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed, missing or inconsistent input.
    Data,
    /// A quantity that is undefined for the given (valid) input.
    Degenerate,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::EmptyArea(_) | Error::Undefined(_) => ErrorKind::Degenerate,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn undefined(msg: impl Into<String>) -> Self {
        Error::Undefined(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
