use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape error: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("training failed: {0}")]
    Training(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("{what} did not converge (best mse {mse:e})")]
    NotConverged { what: String, best: Vec<f64>, mse: f64 },

    #[error("input error: {0}")]
    Input(String),

    #[error("grid mismatch: {0}")]
    Grid(String),

    #[error("point ({x}, {y}) is outside the raster extent")]
    Bounds { x: f64, y: f64 },

    #[error("{}:{line}{}: {msg}", path.display(), col.map(|c| format!(":{c}")).unwrap_or_default())]
    Format {
        path: PathBuf,
        line: usize,
        col: Option<usize>,
        msg: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: usize, col: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            col,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
