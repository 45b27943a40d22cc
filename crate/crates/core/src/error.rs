use thiserror::Error;

/// Errors raised by the geometry, constraint and flow routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point outside the chart interior: {0}")]
    OutOfChart(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("singular Gram matrix (condition number {condition:.3e}); redundant combination: {combination}")]
    SingularGram { condition: f64, combination: String },

    #[error("state vector is zero")]
    ZeroVector,

    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("constraint {0} has zero variance (eigenstate)")]
    EigenstateDegenerate(usize),

    #[error("point is off the constraint surface (residual {0:.3e})")]
    OffSurface(f64),

    #[error("{0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
