use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] mfg_price::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    /// 2 for bad input, 3 for numerical divergence, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        use mfg_price::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Parameter(_) | E::Shape(_) | E::DomainViolation { .. }) => 2,
            CliError::Core(E::Diverged { .. } | E::NonFinite { .. }) => 3,
            _ => 1,
        }
    }
}
