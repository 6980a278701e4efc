use thiserror::Error;

/// Errors produced by the mean-field laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mode count d = {0}; at least one mode is required")]
    ZeroModes(usize),

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("vector is not normalized: norm = {0}")]
    NotNormalized(f64),

    #[error("matrix is not unitary: max deviation {0:e}")]
    NotUnitary(f64),

    #[error("operator is not Hermitian: max deviation {0:e}")]
    NotHermitian(f64),

    #[error("generators are not orthonormal: max deviation {0:e}")]
    NotOrthonormal(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid particle number: {0}")]
    InvalidParticleNumber(String),

    #[error("contraction order k = {k} out of range (max {max})")]
    ContractionOrder { k: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("numerical breakdown: {0}")]
    Numerical(String),

    #[error("time {t} outside the convergence disk |t| < {limit}")]
    OutsideConvergenceDisk { t: f64, limit: f64 },

    #[error("family exact at this p,t-grid: every distance is zero")]
    ExactFamily,

    #[error("insufficient data for slope fit: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
