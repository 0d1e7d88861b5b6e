use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value in input")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("block index {k} out of range for order {n}")]
    IndexOutOfRange { k: usize, n: usize },
    #[error("leading block is not positive definite")]
    SingularBlock,
    #[error("transform is numerically singular")]
    SingularTransform,
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
    #[error("anchor is zero")]
    ZeroAnchor,
    #[error("basis is linearly dependent")]
    DependentBasis,
    #[error("linear equations are inconsistent")]
    InconsistentEquations,
    #[error("numerically ambiguous: {0}")]
    NumericallyAmbiguous(String),
    #[error("objective is unbounded on the affine space")]
    NotBounded,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("last subproblem has no positive semidefinite point")]
    LastInfeasible,
    #[error("target distance not reached before alpha cap {alpha:e}")]
    EpsNotReached { alpha: f64 },
    #[error("malformed certificate: {0}")]
    MalformedCertificate(String),
    #[error("reduction chain does not end in a strongly infeasible or empty step")]
    IncompleteChain,
    #[error("unsatisfiable request: {0}")]
    UnsatisfiableRequest(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
