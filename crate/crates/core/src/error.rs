use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(io::Error),

    /// Malformed Y4M stream. `frame` is set when the problem is inside a frame.
    #[error("format error{}: {message}", .frame.map(|f| format!(" at frame {f}")).unwrap_or_default())]
    Format { frame: Option<usize>, message: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("join error: {0}")]
    Join(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("{descriptor}: {cause}")]
    Descriptor {
        descriptor: &'static str,
        cause: Box<Error>,
    },

    #[error("csv error: {0}")]
    Csv(csv::Error),

    #[error("json error: {0}")]
    Json(serde_json::Error),
}

impl Error {
    pub(crate) fn format(frame: Option<usize>, message: impl Into<String>) -> Self {
        Error::Format {
            frame,
            message: message.into(),
        }
    }

    pub(crate) fn in_descriptor(self, descriptor: &'static str) -> Self {
        match self {
            e @ Error::Descriptor { .. } => e,
            e => Error::Descriptor {
                descriptor,
                cause: Box::new(e),
            },
        }
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}
