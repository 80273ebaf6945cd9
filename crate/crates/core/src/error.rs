use thiserror::Error;

/// Errors raised by the library.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (‖h − h†‖_F = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (‖U U† − I‖_F = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("thermal tail too heavy: truncation would need nmax > {cap}")]
    TailTooHeavy { cap: usize },

    #[error("hypergeometric series hits a pole at term {n} (a + n = 0)")]
    PoleHit { n: usize },

    #[error("series did not converge within {terms} terms")]
    NoConvergence { terms: usize },

    #[error("work value sits on peak n = {n} of the distribution")]
    OnPeak { n: usize },

    #[error("quadrature failed to reach tolerance (error estimate {estimate:e})")]
    QuadratureFailure { estimate: f64 },

    #[error("system state is not diagonal in the initial energy basis (max off-diagonal {max_offdiag:e})")]
    DiagonalityViolation { max_offdiag: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
