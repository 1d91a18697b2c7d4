use thiserror::Error;

/// Errors raised by coarsenkit operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric: entry ({row}, {col}) differs from its transpose")]
    NotSymmetric { row: usize, col: usize },

    #[error("negative weight {weight} at ({row}, {col})")]
    NegativeWeight { row: usize, col: usize, weight: f64 },

    #[error("not a graph Laplacian: {0}")]
    InvalidLaplacian(String),

    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("invalid loading matrix: {0}")]
    InvalidLoading(String),

    #[error("row {row} of the loading matrix is zero")]
    ZeroRow { row: usize },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("backtracking exceeded {0} doublings of the step constant")]
    BacktrackingExhausted(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable identifier for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::NotSymmetric { .. } => "not_symmetric",
            Error::NegativeWeight { .. } => "negative_weight",
            Error::InvalidLaplacian(_) => "invalid_laplacian",
            Error::Disconnected { .. } => "disconnected",
            Error::InvalidLoading(_) => "invalid_loading",
            Error::ZeroRow { .. } => "zero_row",
            Error::NotPositiveDefinite(_) => "not_positive_definite",
            Error::BacktrackingExhausted(_) => "backtracking_exhausted",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Parse { .. } => "parse",
            Error::Linalg(_) => "linalg",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
