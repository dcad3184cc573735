use std::path::{Path, PathBuf};

use thiserror::Error;
use threshold_diffusion::Error as LibError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Args(String),

    #[error(transparent)]
    Lib(#[from] LibError),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for bad input, 3 when the numerics could not deliver the
    /// requested accuracy, 4 for file system trouble.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Args(_) => 2,
            CliError::Lib(LibError::Accuracy { .. } | LibError::Integrand { .. }) => 3,
            CliError::Lib(_) => 2,
            CliError::Io { .. } => 4,
        }
    }
}
