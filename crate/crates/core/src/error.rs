use std::path::PathBuf;

/// Errors raised anywhere in the library.
///
/// Each variant maps onto one of the process exit codes used by the `best`
/// binary (see [`Error::exit_code`]).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("policy error: {0}")]
    Policy(String),

    #[error("fingerprint mismatch: expected {expected}, found {found}")]
    Fingerprint { expected: String, found: String },

    #[error("split search error: {0}")]
    Split(String),

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }

    /// Process exit code: 2 IO, 3 schema/data, 4 policy, 5 fingerprint, 1 other.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::Schema(_) | Error::Data(_) | Error::Format { .. } => 3,
            Error::Policy(_) => 4,
            Error::Fingerprint { .. } => 5,
            Error::Split(_) | Error::Config(_) => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
