use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config values or output paths.
    #[error("{0}")]
    Usage(String),
    /// Inputs that cannot be read, parsed or segmented.
    #[error("{0}")]
    Data(String),
    /// The optimizer hit its iteration cap.
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::NotConverged(_) => 3,
        }
    }
}

impl From<crashfit_core::Error> for CliError {
    fn from(e: crashfit_core::Error) -> Self {
        match e {
            crashfit_core::Error::InvalidArgument(msg) => CliError::Usage(msg),
            other => CliError::Data(other.to_string()),
        }
    }
}
