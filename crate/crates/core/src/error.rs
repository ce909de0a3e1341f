use thiserror::Error;

/// Errors raised anywhere in the layout pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("degenerate layout: {0}")]
    DegenerateLayout(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("loss node is not a scalar (shape {0}x{1})")]
    NonScalarLoss(usize, usize),
    #[error("non-finite gradient in parameter {0}")]
    NonFiniteGradient(String),
    #[error("non-finite loss at epoch {epoch}: {what}")]
    NonFiniteLoss { epoch: usize, what: String },
    #[error("per-graph-initial normalization requires an initial layout")]
    MissingInitialLayout,
    #[error("empty test set")]
    EmptyTestSet,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Coarse classification used for process exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse(_) => ErrorKind::Parse,
            Error::Validation(_) | Error::Argument(_) | Error::MissingInitialLayout => {
                ErrorKind::Validation
            }
            _ => ErrorKind::Runtime,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Parse,
    Validation,
    Runtime,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
