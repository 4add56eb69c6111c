use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("non-finite value produced by {0}")]
    NonFinite(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A guidance score with (near-)zero norm; the caller decides whether to skip.
    #[error("degenerate score: {0}")]
    Degenerate(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}: {err}")]
    Io { path: String, err: std::io::Error },
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: &[usize], right: &[usize]) -> Self {
        Error::Shape {
            op,
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            err,
        }
    }

    /// Attach a file path to a parse error produced without one.
    pub fn with_path(self, path: impl AsRef<std::path::Path>) -> Self {
        match self {
            Error::Parse { line, msg, .. } => Error::Parse {
                path: path.as_ref().display().to_string(),
                line,
                msg,
            },
            other => other,
        }
    }
}
