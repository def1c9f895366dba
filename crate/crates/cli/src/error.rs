use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] coexist_core::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),

    /// Infeasible request; the message is already formatted.
    #[error("{0}")]
    Infeasible(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    /// 2 usage or config, 3 infeasible, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        use coexist_core::Error as E;
        match self {
            CliError::Infeasible(_) | CliError::Core(E::Infeasible { .. }) => 3,
            CliError::Core(E::NumericalFailure { .. } | E::Unbounded) => 4,
            _ => 2,
        }
    }
}
