use std::fmt;
use std::io;

/// Errors surfaced by the experiment runner and CLI.
#[derive(Debug)]
pub enum HarnessError {
    Core(hdchange_core::Error),
    Io { path: String, source: io::Error },
    Parse(String),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Core(e) => write!(f, "{e}"),
            HarnessError::Io { path, source } => write!(f, "{path}: {source}"),
            HarnessError::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for HarnessError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            HarnessError::Core(e) => Some(e),
            HarnessError::Io { source, .. } => Some(source),
            HarnessError::Parse(_) => None,
        }
    }
}

impl From<hdchange_core::Error> for HarnessError {
    fn from(e: hdchange_core::Error) -> Self {
        HarnessError::Core(e)
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn io_err(path: &std::path::Path, source: io::Error) -> HarnessError {
    HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}
