use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid dimensions: cutoff {cutoff_n}, side {side_points} ({reason})")]
    InvalidDimensions {
        cutoff_n: usize,
        side_points: usize,
        reason: &'static str,
    },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("unsupported Hermite/Wick degree {0} (supported: 0..=4)")]
    UnsupportedDegree(usize),

    #[error("non-finite field coefficient at t = {t}")]
    NonFiniteField { t: f64 },

    #[error("trajectory horizon {horizon} is shorter than the required {required}")]
    InsufficientHorizon { horizon: f64, required: f64 },

    #[error("degenerate test: {0}")]
    DegenerateTest(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
