//! CLI error type with process exit codes: 1 usage/config, 2 solver, 3
//! analysis.

use vfv_core::CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}:{line}: {message}")]
    Config {
        path: String,
        line: usize,
        message: String,
    },
    #[error("solver: {0}")]
    Solver(String),
    #[error("analysis: {0}")]
    Analysis(String),
    #[error("io: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            CliError::Solver(_) | CliError::Io { .. } => 2,
            CliError::Analysis(_) => 3,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn solver(err: CoreError) -> Self {
        CliError::Solver(err.to_string())
    }

    pub fn analysis(err: CoreError) -> Self {
        CliError::Analysis(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
