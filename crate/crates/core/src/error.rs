use ndarray_linalg::error::LinalgError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("site {site} out of range for a space with {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("site set must not be empty")]
    EmptySiteSet,

    #[error("interferometer is not unitary (max deviation of U^dag U from I is {deviation:e})")]
    NonUnitary { deviation: f64 },

    #[error("feedback operator for channel {channel} on site {site} is not Hermitian (deviation {deviation:e})")]
    NonHermitianFeedback {
        channel: usize,
        site: usize,
        deviation: f64,
    },

    #[error("operands live on different Hilbert spaces")]
    SpaceMismatch,

    #[error("unsupported size: {0}")]
    UnsupportedSize(String),

    #[error("solver failed: {0}")]
    SolverFailure(String),

    #[error("integrated state has eigenvalue {min_eigenvalue:e} below -1e-8; the step size is too large")]
    NegativeEigenvalue { min_eigenvalue: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Re[V] is ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("quadrature grid holds probability mass {mass} (< 1 - 1e-4) for mode {mode}; field truncation or grid too small")]
    TruncationLeak { mode: usize, mass: f64 },

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, Error>;
