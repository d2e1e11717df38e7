use thiserror::Error;

/// Errors raised by model construction, reformulation, calibration and file I/O.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown uncertainty set `{0}`")]
    UnknownSet(String),
    #[error("invalid uncertainty set: {0}")]
    InvalidSet(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("robust counterpart of `{label}` is unbounded: {reason}")]
    UnboundedCounterpart { label: String, reason: String },
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("distribution-free guarantee assumes box bound 1, set declares {0}")]
    NonUnitBox(f64),
    #[error("invalid sampler: {0}")]
    InvalidSampler(String),
    #[error("reports are not comparable: {0}")]
    Incomparable(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what: what.to_string(),
            expected,
            found,
        })
    }
}
