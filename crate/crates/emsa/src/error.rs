use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument violated a documented precondition of the operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The operation is not defined for this input kind.
    #[error("not implemented: {0}")]
    NotImplemented(String),

    /// The requested region exceeds the dense-matrix site cap.
    #[error("region has {sites} sites, exceeding the cap of {cap}")]
    SiteCapExceeded { sites: usize, cap: usize },

    /// Dense diagonalization failed or produced an eigensystem that does
    /// not satisfy the residual/orthonormality contract.
    #[error("eigensolver failure: {0}")]
    SolverFailure(String),

    /// The spectral parameter is too close to the spectrum to invert.
    #[error("spectral parameter {z} is within {dist:e} of the spectrum")]
    NearSingular { z: f64, dist: f64 },

    /// Two distinct eigenvalues are exactly equidistant from the target.
    #[error("ambiguous nearest eigenvalue at distance {dist:e} from {lambda}")]
    AmbiguousNearest { lambda: f64, dist: f64 },

    /// A hypothesis required by the operation does not hold for this input.
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
