use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid config: field `{field}` violates {gate}")]
    ConfigInvalid { field: String, gate: String },

    #[error("cannot read config {path}: {reason}")]
    ConfigUnreadable { path: PathBuf, reason: String },

    #[error("cannot read record {path}: {reason}")]
    RecordUnreadable { path: PathBuf, reason: String },

    #[error("trial {index}: {source}")]
    Trial {
        index: u64,
        #[source]
        source: locaudit_core::Error,
    },

    #[error(transparent)]
    Core(#[from] locaudit_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("worker pool: {0}")]
    Pool(String),
}

impl HarnessError {
    pub(crate) fn invalid(field: impl Into<String>, gate: impl Into<String>) -> Self {
        HarnessError::ConfigInvalid { field: field.into(), gate: gate.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;
