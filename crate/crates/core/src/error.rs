use std::path::PathBuf;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {left} vs {right}")]
    Shape { left: String, right: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("marker detection found {found} candidate markers, expected 4")]
    Detection { found: usize },

    #[error("homography estimation failed: {0}")]
    Estimation(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("no ratings match {0}")]
    Lookup(String),

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("line {line}: {message}")]
    Record { line: u64, message: String },

    #[error("cycle {cycle}: {source}")]
    Cycle {
        cycle: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Decode { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn shape(left: impl Into<String>, right: impl Into<String>) -> Self {
        Error::Shape {
            left: left.into(),
            right: right.into(),
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input rather than internal failure.
    pub fn is_user_error(&self) -> bool {
        match self {
            Error::Cycle { source, .. } => source.is_user_error(),
            Error::Calibration(_) => false,
            _ => true,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
