use thiserror::Error;

/// Failure of a run, mapped onto the process exit status.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] gelfand_core::Error),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Validation(_) => 2,
            LabError::Numerical(_) | LabError::Io(_) => 3,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        LabError::Validation(msg.into())
    }
}
