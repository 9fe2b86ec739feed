use thiserror::Error;

/// Errors raised by layout construction, model assembly and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("height {height} um must lie in [0, radius {radius}) um")]
    DegenerateRing { height: f64, radius: f64 },

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("separation must be positive, got {0} um")]
    NonPositiveDistance(f64),

    #[error("pair ({0}, {1}) does not name two distinct atoms of the layout")]
    InvalidPair(String, String),

    #[error("no admissible position after {attempts} attempts (max U_cc {max_ucc} rad/us)")]
    SamplerExhausted { attempts: usize, max_ucc: f64 },

    #[error("invalid basis digit {digit:?} at position {position}")]
    InvalidDigit { digit: char, position: usize },

    #[error("state is not computational: {0}")]
    NotComputational(String),

    #[error("Rabi frequency must be positive, got {0} rad/us")]
    NonPositiveRabi(f64),

    #[error("decay rate must be non-negative, got {0} rad/us")]
    NegativeRate(f64),

    #[error("atom count mismatch: {0}")]
    AtomCountMismatch(String),

    #[error("time {t} us outside schedule [0, {total}] us")]
    TimeOutOfRange { t: f64, total: f64 },

    #[error("initial state must be normalized, squared norm is {0}")]
    NotNormalized(f64),

    #[error("state dimension {got} does not match system dimension {expected}")]
    DimensionMismatch { got: usize, expected: usize },

    #[error("density-matrix solver limited to dimension {limit}, system has {dim}")]
    DimensionCap { dim: usize, limit: usize },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("non-finite amplitude at t = {t} us in pulse window {window}")]
    NonFinite { t: f64, window: usize },

    #[error("control-target interaction vanishes (blockade zero at cos(theta) = 1/sqrt(3))")]
    BlockadeZero,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
