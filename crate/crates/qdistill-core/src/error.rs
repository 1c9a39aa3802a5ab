use thiserror::Error;

/// Error type shared across the library.
///
/// The variants follow the failure categories surfaced by the CLI:
/// configuration/argument/input problems are caller mistakes, `Data`
/// covers corpus/teacher/checkpoint content, and `Numeric` flags
/// non-finite values produced during optimization.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("numerical error: {0}")]
    Numeric(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
