use thiserror::Error;

/// Errors produced by chain construction, diagonalization and propagation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("chain needs at least 2 sites, got {0}")]
    ChainTooShort(usize),
    #[error("period must be at least 1")]
    ZeroPeriod,
    #[error("{what} has length {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("coupling on bond {bond} is zero")]
    ZeroCoupling { bond: usize },
    #[error("{what} index {index} out of range 1..={max}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        max: usize,
    },
    #[error("eigensolver did not converge for a {size}x{size} matrix")]
    NoConvergence { size: usize },
    #[error("analytic solution needs period 3 and M = 3n+2 (got period {period}, M = {m}); use the numeric path")]
    UnsupportedShape { period: usize, m: usize },
    #[error("secular equation root bracketing failed for k = {k}")]
    RootFinding { k: usize },
    #[error("degenerate parameters: {0}")]
    Degenerate(String),
    #[error("p_f = {p_f} is not below weight {weight} of eigenvalue index {index}")]
    OrderingViolation { p_f: f64, index: usize, weight: f64 },
    #[error("amplitude magnitude {0} outside [0, 1]")]
    InvalidAmplitude(f64),
    #[error("integration blew up at t = {time}")]
    BlowUp { time: f64 },
    #[error("unknown parameter selector '{0}'")]
    UnknownSelector(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
