use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },

    #[error("config: {key}: {message}")]
    Validation { key: String, message: String },

    #[error("{module}::{operation}: {source}")]
    Run {
        module: &'static str,
        operation: &'static str,
        #[source]
        source: lattice_spectra_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for bad input, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Run { source, .. } if !source.is_validation() => 2,
            _ => 1,
        }
    }
}

pub(crate) trait Context<T> {
    fn context(self, module: &'static str, operation: &'static str) -> Result<T, CliError>;
}

impl<T> Context<T> for lattice_spectra_core::Result<T> {
    fn context(self, module: &'static str, operation: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Run {
            module,
            operation,
            source,
        })
    }
}
