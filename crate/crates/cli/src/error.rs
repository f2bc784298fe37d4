use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("simulation error: {0}")]
    Runtime(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{0} self-test check(s) failed")]
    SelftestFailed(usize),

    #[error("replay differs from the manifest: {0}")]
    ReplayMismatch(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for bad input, 3 for failures while running,
    /// 4 when a verification (self-test, replay) does not hold.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::Io { .. } => 3,
            CliError::SelftestFailed(_) | CliError::ReplayMismatch(_) => 4,
        }
    }
}

impl From<fdcr::Error> for CliError {
    fn from(e: fdcr::Error) -> Self {
        match e {
            fdcr::Error::InvalidParameter { .. } => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}
