use thiserror::Error;

/// Errors raised by the numeric kernels, chart design and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The CV is outside the range where the sampling law is trusted (γ < 0.5).
    #[error("coefficient of variation {gamma} is outside the validity window (0, 0.5); use the force option to evaluate anyway")]
    OutsideValidity { gamma: f64 },

    /// A series did not reach its tolerance within the term cap.
    #[error("evaluation of {what} failed to converge within {terms} terms")]
    EvaluationFailure { what: &'static str, terms: usize },

    /// The Markov chain has no absorption (p = 1), so the run length is infinite.
    #[error("run length is infinite: the chart can never signal (p = 1)")]
    Singular,

    /// No chart constant inside the search bracket reaches the target in-control ARL.
    #[error("in-control ARL {target} is unattainable; achievable range is [{min_arl0:.4}, {max_arl0:.4}]")]
    Unattainable {
        target: f64,
        min_arl0: f64,
        max_arl0: f64,
    },

    /// The root finder ran out of iterations.
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// θ + B·b/τ ≤ 0 in the measurement-error model.
    #[error("degenerate measurement model: denominator {0} is not positive")]
    DegenerateDenominator(f64),

    #[error("invalid run rule: {0}")]
    InvalidRule(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A malformed row in an input data file (1-based line number).
    #[error("line {line}: {message}")]
    Data { line: usize, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Coarse error class used by command-line front ends.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Domain(_)
            | Error::OutsideValidity { .. }
            | Error::InvalidRule(_)
            | Error::DegenerateDenominator(_)
            | Error::Config(_)
            | Error::Data { .. } => ErrorClass::Usage,
            Error::EvaluationFailure { .. } | Error::Singular | Error::NonConvergence { .. } => {
                ErrorClass::Numeric
            }
            Error::Unattainable { .. } => ErrorClass::Infeasible,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Numeric,
    Infeasible,
}

impl ErrorClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorClass::Usage => "usage",
            ErrorClass::Numeric => "numeric_failure",
            ErrorClass::Infeasible => "infeasible_design",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
