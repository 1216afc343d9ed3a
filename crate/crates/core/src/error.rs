use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid quadrature grid: {0}")]
    InvalidGrid(String),

    #[error("argument out of domain: {0}")]
    OutOfDomain(String),

    #[error("{what} did not converge (achieved residual {residual:.3e})")]
    NoConvergence { what: &'static str, residual: f64 },

    #[error("spectrum truncated at |m| <= {m_cut}: dropped tail mass {tail:.3e}")]
    Truncation { m_cut: i64, tail: f64 },

    #[error("not supported: {0}")]
    Unsupported(&'static str),

    #[error("solver inconsistency: {0}")]
    SolverInconsistency(String),

    #[error("uncertainty bound violated: gap {gap:.3e}")]
    BoundViolation { gap: f64 },

    #[error("target {value} outside attainable range [{min}, {max}]")]
    Infeasible { value: f64, min: f64, max: f64 },

    #[error("root bracketing failed on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("objective not unimodal near probes {probes:?}")]
    NotUnimodal { probes: [(f64, f64); 3] },

    #[error("all measurement repeats discarded")]
    NoCounts,
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
