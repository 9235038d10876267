//! Error type shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid stimulus: {0}")]
    InvalidStimulus(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("not enough data: {0}")]
    NotEnoughData(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A fit exhausted its restart budget without meeting the convergence
    /// tolerance. Carries the best point found so callers can inspect it.
    #[error("fit did not converge: best loss {best_loss:.6e}")]
    FitNotConverged { best_loss: f64, best_params: Vec<f64> },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
