use thiserror::Error;

/// Errors raised by the design, evaluation and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not positive semi-definite (smallest eigenvalue {min:e}, largest {max:e})")]
    NotPsd { min: f64, max: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no eigenmode above the activity threshold; nothing to waterfill")]
    NoActiveModes,

    #[error("training set too small: {got} draws for {cells} cells (need at least {need})")]
    TrainingTooSmall { got: usize, cells: usize, need: usize },

    #[error("empty quantization cell {0}")]
    EmptyCell(usize),

    #[error("all region Gramians vanish; no beam direction is defined")]
    ZeroGramian,

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("codebook format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
