use thiserror::Error;

/// Library-level error type. Numerical rejections are typed so callers
/// (the Monte Carlo harness in particular) can react to them, e.g. by
/// resampling a trial whose spectrum is numerically degenerate.
#[derive(Debug, Error)]
pub enum OverlapError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear algebra backend failure: {0}")]
    Backend(String),

    #[error(
        "near-degenerate spectrum: min eigenvalue gap {gap:.3e} below threshold {threshold:.3e}"
    )]
    NearDegenerate { gap: f64, threshold: f64 },

    #[error("solver failed to converge: {0}")]
    NoConvergence(String),

    #[error("characteristic crosses the real axis near t = {time:.6}")]
    FlowCrossing { time: f64 },

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<ndarray_linalg::error::LinalgError> for OverlapError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        OverlapError::Backend(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, OverlapError>;
