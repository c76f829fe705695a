//! Error type shared by all simulator modules.

use thiserror::Error;

/// Errors produced by simulator operations.
///
/// Variants are grouped so the CLI can map them onto exit codes:
/// validation problems, resource-budget overruns, and numerical failures.
#[derive(Debug, Error)]
pub enum SimError {
    /// A caller-supplied argument violates an operation precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Subsystem dimension lists of two objects do not match.
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimMismatch { expected: Vec<usize>, got: Vec<usize> },

    /// A requested object would exceed the configured dense-storage budget.
    #[error("dimension budget exceeded: requires {required} elements, budget is {budget} (~{} MB)", required * 16 / (1024 * 1024))]
    DimensionBudget { required: usize, budget: usize },

    /// An amplitude would be pushed beyond the Fock cutoff; the operation
    /// refuses rather than silently truncating.
    #[error("Fock truncation: |alpha|^2 = {alpha_sq:.3} needs cutoff >= {required_cutoff}, space has {cutoff}")]
    Truncation { alpha_sq: f64, required_cutoff: usize, cutoff: usize },

    /// A measurement branch was requested whose Born probability is
    /// numerically zero.
    #[error("degenerate measurement branch: probability {probability:.3e} below 1e-14")]
    DegenerateBranch { probability: f64 },

    /// A schedule failed structural validation at compile time.
    #[error("schedule validation: {0}")]
    Schedule(String),

    /// A numerical kernel failed (non-finite values, no convergence).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, SimError>;
