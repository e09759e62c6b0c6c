//! Error types shared across the library.

use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, CoreError>;

/// Errors produced by the simulation layers.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Input outside the mathematical domain of a special function.
    #[error("domain error in {func}: {msg}")]
    Domain { func: &'static str, msg: String },

    /// Structurally invalid argument (sizes, indices, ranges).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An iterative numerical procedure failed to converge.
    #[error("numerical failure in {what}: {msg}")]
    Numeric { what: &'static str, msg: String },

    /// The level structure does not match the assumed qutrit/qubit layout.
    #[error("degeneracy structure: {0}")]
    Degeneracy(String),

    /// A drive detuning fell below the resonance-exclusion floor.
    #[error("resonance: {0}")]
    Resonance(String),

    /// The optimizer had no feasible point within the given bounds.
    #[error("optimization: {0}")]
    Optimization(String),

    /// Requested basis would exceed the enumeration budget.
    #[error("capacity: basis too large ({estimate} states estimated, limit {limit})")]
    Capacity { estimate: usize, limit: usize },

    /// An operator or path was evaluated against an incompatible basis.
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    /// Register truncation guard tripped (Fock cutoff too small).
    #[error("truncation: {0}")]
    Truncation(String),
}
