use std::fmt;
use std::path::PathBuf;

use roifuse_core::detector::DetectorError;
use roifuse_core::fusion::FuseError;
use roifuse_core::metrics::MetricsError;
use thiserror::Error;

/// A sequence or config file that parsed but violates the schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaError {
    pub frame_id: Option<u64>,
    /// Dotted path of the offending field, e.g. `gt[2].x1`.
    pub field: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(
        frame_id: Option<u64>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Self {
            frame_id,
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.frame_id {
            Some(id) => write!(
                f,
                "schema error in frame {id}, field `{}`: {}",
                self.field, self.message
            ),
            None => write!(f, "schema error, field `{}`: {}", self.field, self.message),
        }
    }
}

impl std::error::Error for SchemaError {}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: malformed JSON: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Fuse(#[from] FuseError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("failed to write report: {0}")]
    Report(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for bad input (files, flags, configuration), 2 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::Json { .. }
            | Error::Schema(_)
            | Error::Config(_)
            | Error::Detector(DetectorError::UnknownDetector(_))
            | Error::Detector(DetectorError::InvalidProfile(_))
            | Error::Detector(DetectorError::InvalidCatalog(_))
            | Error::Fuse(FuseError::InvalidConfig(_))
            | Error::Fuse(FuseError::InputSizeMismatch { .. }) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
