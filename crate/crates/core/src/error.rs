use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coefficient {index} has imaginary part {imag:e}, evaluation is inconsistent")]
    ComplexCoefficient { index: usize, imag: f64 },

    #[error("quadrature did not stabilise: last doubling moved the value by {shift:e} (tolerance {tolerance:e})")]
    QuadratureNotConverged { shift: f64, tolerance: f64 },

    #[error("exact arithmetic invariant violated: {0}")]
    Arithmetic(String),

    #[error("weight {weight}: {reason}")]
    Spectrum { weight: u32, reason: String },

    #[error("Deligne bound violated at p = {p}: |lambda| = {value}")]
    DeligneViolation { p: u64, value: f64 },

    #[error("weight {weight}: linear system for harmonic weights is singular (condition number {condition:e})")]
    SingularWeights { weight: u32, condition: f64 },

    #[error("weight {weight}: harmonic weight {index} is not positive ({value:e})")]
    NonPositiveWeight { weight: u32, index: usize, value: f64 },

    #[error("no angle available for prime {0}")]
    MissingAngle(u64),

    #[error("brute-force expansion needs {needed} terms, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("lambda({0}) is not available from the stored prime-power table")]
    MissingEigenvalue(u64),
}

pub type Result<T> = std::result::Result<T, Error>;
