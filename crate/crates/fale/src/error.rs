use std::path::{Path, PathBuf};

use fale_core::{ErrorKind, OracleError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] fale_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        kind: ErrorKind,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Format {
        path: PathBuf,
        kind: ErrorKind,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl From<OracleError> for Error {
    fn from(e: OracleError) -> Self {
        Error::Core(e.into())
    }
}

impl Error {
    pub(crate) fn io(path: &Path, kind: ErrorKind, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_owned(),
            kind,
            source,
        }
    }

    pub(crate) fn format(path: &Path, kind: ErrorKind, message: impl ToString) -> Self {
        Error::Format {
            path: path.to_owned(),
            kind,
            message: message.to_string(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Core(e) => e.kind(),
            Error::Io { kind, .. } | Error::Format { kind, .. } => *kind,
            Error::Config(_) => ErrorKind::Config,
        }
    }

    /// 2 for configuration, 3 for data, 4 for oracle failures.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Oracle => 4,
        }
    }
}
