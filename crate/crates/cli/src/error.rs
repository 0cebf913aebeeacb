use thiserror::Error;

/// Everything the command line can fail with, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or flag combinations (exit 2).
    #[error("{0}")]
    Usage(String),
    /// Input files or parameters that do not validate (exit 3).
    #[error("{0}")]
    Validation(String),
    /// Failures while doing the work: saturation, range, i/o, divergence (exit 4).
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}
