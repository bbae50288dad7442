use thiserror::Error;

/// Errors raised by the laboratory.
///
/// `CounterexampleFound` is the only variant that signals a mathematical
/// assertion failure; everything else is a precondition or numerical failure.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("shape mismatch: {0}")]
    ShapeError(String),

    #[error("configuration error: {0}")]
    ConfigError(String),

    #[error("parameter error: {0}")]
    ParameterError(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Nonconvergence { iterations: usize, residual: f64 },

    #[error("bracket [{lo}, {hi}] does not straddle the critical exponent")]
    BracketError { lo: f64, hi: f64 },

    #[error("degenerate sampling: effective sample size {ess:.3} below {threshold:.3}")]
    DegenerateSampling { ess: f64, threshold: f64 },

    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),

    #[error("functional undefined: {0}")]
    DomainError(String),

    #[error("counterexample found: {0}")]
    CounterexampleFound(String),

    #[error("finite-difference stencil point {index} failed: {source}")]
    Stencil {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// True for failures that mean an inequality or bound was breached.
    pub fn is_assertion_failure(&self) -> bool {
        match self {
            Error::CounterexampleFound(_) => true,
            Error::Stencil { source, .. } => source.is_assertion_failure(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
