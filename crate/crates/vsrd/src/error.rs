use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("network kernel has dimension {0}, expected 1")]
    SingularNetwork(usize),
    #[error("network kernel vector changes sign")]
    NonPositiveKernel,
    #[error("network has {0} strongly connected components, expected 1")]
    DisconnectedNetwork(usize),
    #[error("invalid resolution: {0}")]
    InvalidResolution(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("unknown boundary `{0}`")]
    UnknownBoundary(String),
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("assembled operator is not conservative (column sum {0:e})")]
    NonConservative(f64),
    #[error("layout mismatch: expected {expected} entries, got {got}")]
    LayoutMismatch { expected: usize, got: usize },
    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),
    #[error("operator kernel is not one-dimensional")]
    KernelDimensionError,
    #[error("kernel vector changes sign")]
    SignChangeError,
    #[error("fixed-point iteration did not converge in {0} sweeps")]
    NoConvergence(usize),
    #[error("state has zero mass")]
    ZeroMass,
    #[error("equilibrium has a non-positive entry")]
    NonpositiveEquilibrium,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("eigensolve failed: {0}")]
    EigensolveFailure(String),
    #[error("no epsilon tuple on the grid gives positive coefficients")]
    InfeasibleEpsilons,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// True for errors caused by bad input rather than numerical breakdown.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidNetwork(_)
                | Error::SingularNetwork(_)
                | Error::DisconnectedNetwork(_)
                | Error::InvalidResolution(_)
                | Error::InvalidGeometry(_)
                | Error::UnknownBoundary(_)
                | Error::GeometryMismatch(_)
                | Error::LayoutMismatch { .. }
                | Error::InvalidParameter(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
