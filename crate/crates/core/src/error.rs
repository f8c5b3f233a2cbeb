use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite input in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is singular or indefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("entropy undefined: covariance is singular")]
    SingularCovariance,

    #[error("weights do not form a simplex vector: {0}")]
    Simplex(String),

    #[error("{what} did not converge after {iterations} iterations")]
    Convergence { what: &'static str, iterations: usize },

    #[error("problem has {cells} cells, limit is {limit}")]
    SizeGuard { cells: u128, limit: u128 },

    #[error("infeasible marginals: {0}")]
    InfeasibleMarginals(String),

    #[error("grid domain too small: {0}")]
    DomainTooSmall(String),

    #[error("barycenter undefined: zero mass")]
    ZeroMass,

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("usage: {0}")]
    Usage(String),
}

impl Error {
    /// Stable machine-readable code used in CLI error objects.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "DIMENSION_MISMATCH",
            Error::NonFinite(_) => "NON_FINITE",
            Error::NotPsd { .. } => "NOT_PSD",
            Error::NotPositiveDefinite { .. } => "NOT_POSITIVE_DEFINITE",
            Error::SingularCovariance => "SINGULAR_COVARIANCE",
            Error::Simplex(_) => "SIMPLEX_VIOLATION",
            Error::Convergence { .. } => "CONVERGENCE",
            Error::SizeGuard { .. } => "SIZE_GUARD",
            Error::InfeasibleMarginals(_) => "INFEASIBLE_MARGINALS",
            Error::DomainTooSmall(_) => "DOMAIN_TOO_SMALL",
            Error::ZeroMass => "ZERO_MASS",
            Error::HypothesisViolated(_) => "HYPOTHESIS_VIOLATED",
            Error::Invalid(_) => "INVALID_INPUT",
            Error::Solver(_) => "SOLVER_FAILURE",
            Error::Io(_) => "IO",
            Error::Usage(_) => "USAGE",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
