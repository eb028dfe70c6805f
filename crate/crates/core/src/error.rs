use thiserror::Error;

use crate::optimizer::HistoryEntry;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Euler extraction at (or numerically near) pitch = ±π/2.
    #[error("degenerate pose: pitch too close to ±π/2 (|R[2][0]| = {0})")]
    DegeneratePose(f64),

    #[error("no correspondences within {max_dist} m")]
    NoOverlap { max_dist: f64 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Every objective evaluation failed. Carries the partial history.
    #[error("registration failed after {} evaluations", history.len())]
    RegistrationFailed { history: Vec<HistoryEntry> },

    #[error(transparent)]
    Parse(#[from] crate::io::ParseError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
