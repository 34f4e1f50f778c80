use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a physical or structural invariant.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Preset name not recognized; lists the valid options.
    #[error("unknown preset '{name}', expected one of: {}", options.join(", "))]
    UnknownPreset {
        name: String,
        options: Vec<&'static str>,
    },

    /// An approximation was requested outside its regime of validity.
    #[error("regime violation: {0}")]
    RegimeViolation(String),

    /// Integration step size fails the stability bound.
    #[error("step size: {0}")]
    StepSize(String),

    /// A computed quantity violated a numerical-integrity bound
    /// (negative population, broken Hermiticity, ...).
    #[error("numerical integrity: {0}")]
    NumericalIntegrity(String),

    /// The objective has no interior maximum.
    #[error("unbounded optimum: {0}")]
    UnboundedOptimum(String),

    /// The sampled bracket is not unimodal.
    #[error("non-unimodal objective: {0}")]
    NonUnimodal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
