use thiserror::Error;

/// Errors shared across the solver and simulation modules.
#[derive(Debug, Error)]
pub enum Error {
    /// Structurally invalid input (shape mismatches, empty collections,
    /// out-of-range parameters).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An index referenced a hospital or patient that does not exist.
    #[error("{kind} index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        limit: usize,
    },

    /// A caller violated an operation's contract (e.g. fractional support
    /// containing a non-optimal hospital).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// The instance is too large for the requested exhaustive computation.
    #[error("instance too large, use approx: {work} units of work exceed cap {cap}")]
    CapExceeded { work: u128, cap: u128 },

    /// An internal invariant that should be unreachable failed.
    #[error("internal invariant failure: {0}")]
    InternalInvariant(String),
}
