use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported Bessel order {0} (expected k/2 with 0 <= k <= 8)")]
    UnsupportedOrder(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point at distance {distance} is on or beyond the injectivity radius {radius}")]
    CutLocus { distance: f64, radius: f64 },

    #[error("matrix is not symmetric positive definite")]
    NotSpd,

    #[error("empty grid")]
    EmptyGrid,

    #[error("rejection envelope violated: density {density} exceeds envelope {envelope}")]
    EnvelopeViolation { density: f64, envelope: f64 },

    #[error("degenerate feature vector: orthonormalization residual {0}")]
    DegenerateFeature(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of internal numerical consistency checks, as opposed
    /// to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::EnvelopeViolation { .. } | Error::DegenerateFeature(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
