use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point is not in the open body")]
    NotInterior,
    #[error("zero direction vector")]
    ZeroDirection,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate body: {0}")]
    Degenerate(String),
    #[error("projective image of the body is unbounded")]
    UnboundedImage,
    #[error("points are not collinear (residual {0:e})")]
    NotCollinear(f64),
    #[error("points are not ordered a, p, q, b along their line")]
    BadOrdering,
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("graph is disconnected")]
    Disconnected,
}

impl Error {
    /// Numerical failures (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
