use thiserror::Error;

/// Errors produced by the bound computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    /// A positive-weight atom of `Q` has zero weight under `P`; `R(Q||P) = +inf`.
    #[error("absolute continuity violated at atom {atom}: q = {q}, p = 0")]
    AbsoluteContinuityViolation { atom: f64, q: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("quantity of interest is almost surely constant")]
    DegenerateQoi,

    #[error("quadrature did not converge: estimated error {error:e} exceeds tolerance {tol:e}")]
    QuadratureNonconvergence { error: f64, tol: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    Nonconvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("need at least {needed} sample points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("exponent overflow guard: c * x = {exponent} exceeds {limit}")]
    OverflowGuard { exponent: f64, limit: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("system too large for exact enumeration: {n} sites (limit {limit})")]
    TooLarge { n: usize, limit: usize },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl BoundError {
    /// True for failures of an iterative numeric method (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            BoundError::QuadratureNonconvergence { .. } | BoundError::Nonconvergence { .. }
        )
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            BoundError::AbsoluteContinuityViolation { .. } => "absolute_continuity_violation",
            BoundError::Domain(_) => "domain",
            BoundError::InvalidDistribution(_) => "invalid_distribution",
            BoundError::DegenerateQoi => "degenerate_qoi",
            BoundError::QuadratureNonconvergence { .. } => "quadrature_nonconvergence",
            BoundError::Nonconvergence { .. } => "nonconvergence",
            BoundError::PreconditionViolation(_) => "precondition_violation",
            BoundError::LengthMismatch { .. } => "length_mismatch",
            BoundError::EmptySample => "empty_sample",
            BoundError::TooFewPoints { .. } => "too_few_points",
            BoundError::OverflowGuard { .. } => "overflow_guard",
            BoundError::DegenerateData(_) => "degenerate_data",
            BoundError::TooLarge { .. } => "too_large",
            BoundError::Parameter(_) => "parameter",
            BoundError::Unsupported(_) => "unsupported",
            BoundError::Parse(_) => "parse",
            BoundError::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, BoundError>;
