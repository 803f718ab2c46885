use alloc::string::String;

use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors surfaced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    /// A symmetric factorization hit a non-positive pivot.
    #[error("matrix is not positive definite: pivot {pivot:e} at index {index}")]
    Conditioning { pivot: f64, index: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("undefined: {0}")]
    Undefined(String),
    #[error("diagnostic unavailable: {0}")]
    DiagnosticUnavailable(String),
}

impl Error {
    /// True for failures caused by floating point conditioning rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Conditioning { .. } | Error::Numerical(_))
    }
}

macro_rules! param_err {
    ($($arg:tt)*) => { $crate::error::Error::Parameter(alloc::format!($($arg)*)) };
}
macro_rules! dim_err {
    ($($arg:tt)*) => { $crate::error::Error::Dimension(alloc::format!($($arg)*)) };
}
pub(crate) use dim_err;
pub(crate) use param_err;
