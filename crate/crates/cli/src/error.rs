use thiserror::Error;

/// Failures mapped onto process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, configuration or arguments; exit code 2.
    #[error("usage error: {0}")]
    Usage(String),
    /// A computation could not be completed; exit code 3.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Artifacts could not be written; exit code 3.
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<subwalk_core::Error> for CliError {
    fn from(e: subwalk_core::Error) -> Self {
        use subwalk_core::Error as E;
        match e {
            E::Domain(_) | E::Range(_) | E::Argument(_) | E::Spec(_) => {
                CliError::Usage(e.to_string())
            }
            E::Resource(_) | E::Regime(_) | E::Numeric(_) => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
