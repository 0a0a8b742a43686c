use thiserror::Error;

/// Error type shared across the crate.
///
/// The variants mirror the process exit codes of the `ektf` binary:
/// configuration problems exit with 1, data problems with 2, and anything
/// that goes wrong during training or evaluation with 3.
#[derive(Debug, Error)]
pub enum EktfError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("training error: {0}")]
    Train(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl EktfError {
    /// Exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            EktfError::Config(_) => 1,
            EktfError::Data(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, EktfError>;
