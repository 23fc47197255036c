use std::path::PathBuf;

/// Process exit codes.
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Config {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// Some instances failed numerically; outputs were still written.
    #[error("{0} instance evaluation(s) failed; see failures.csv")]
    PartialFailure(usize),

    #[error(transparent)]
    Core(#[from] rcl_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::PartialFailure(_) => EXIT_NUMERICAL,
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Core(e) if e.is_io() => EXIT_IO,
            CliError::Core(rcl_core::Error::Json(_)) => EXIT_IO,
            CliError::Core(_) => EXIT_USAGE,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches `path` to I/O failures.
pub trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> CliResult<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> CliResult<T> {
        self.map_err(|source| CliError::Io {
            path: path.into(),
            source,
        })
    }
}
