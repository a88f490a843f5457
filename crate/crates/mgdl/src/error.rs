use std::path::PathBuf;

use thiserror::Error;

/// Failure of a command. Each class maps to its own exit status.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot read config {}: {source}", path.display())]
    ConfigRead {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {}: {message}", path.display())]
    ConfigParse { path: PathBuf, message: String },
    #[error("unknown preset {0:?}; run `mgdl presets` for the list")]
    UnknownPreset(String),
    #[error("invalid config:\n{}", .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    InvalidConfig(Vec<String>),
    #[error("missing data file {}: {source}", path.display())]
    MissingFile {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed data file {}: {detail}", path.display())]
    BadData { path: PathBuf, detail: String },
    #[error("training diverged: {0}")]
    Divergence(mgdl_core::Error),
    #[error("experiment failed: {0}")]
    Core(mgdl_core::Error),
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::ConfigRead { .. } | RunError::ConfigParse { .. } | RunError::UnknownPreset(_) => 2,
            RunError::InvalidConfig(_) => 3,
            RunError::MissingFile { .. } | RunError::BadData { .. } => 4,
            RunError::Divergence(_) => 5,
            RunError::Core(_) => 6,
            RunError::Write { .. } => 7,
        }
    }
}

impl From<mgdl_core::Error> for RunError {
    fn from(e: mgdl_core::Error) -> Self {
        match e {
            mgdl_core::Error::Divergence { .. } => RunError::Divergence(e),
            other => RunError::Core(other),
        }
    }
}

pub(crate) fn write_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Write {
        path: path.to_owned(),
        source,
    }
}
