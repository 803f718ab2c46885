use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, AppError>;

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Model(#[from] bcglpm_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("window {window}: {source}")]
    Window { window: usize, source: Box<AppError> },
}

impl AppError {
    /// Process exit status: 3 for numerical failures, 1 for I/O, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Model(e) if e.is_numerical() => 3,
            AppError::Window { source, .. } => source.exit_code(),
            AppError::Io { .. } => 1,
            AppError::Csv { source, .. } if matches!(source.kind(), csv::ErrorKind::Io(_)) => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> AppError {
        let path = path.into();
        move |source| AppError::Io { path, source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>) -> impl FnOnce(csv::Error) -> AppError {
        let path = path.into();
        move |source| AppError::Csv { path, source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> AppError {
        AppError::Format { path: path.into(), message: message.into() }
    }
}
