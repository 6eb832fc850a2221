//! Error taxonomy shared by all modules.
//!
//! Variants are grouped by *failure class* rather than by module so that
//! callers (and the CLI wrapper) can map them to distinct exit codes:
//! validation errors are caller mistakes, the remaining variants are
//! numerical outcomes of a structurally valid problem.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// One or more hard parameter invariants are violated. Collects every
    /// violation found so a caller can fix them all at once.
    #[error("validation failed: {}", violations.join("; "))]
    Validation { violations: Vec<String> },

    /// A bracketing root search could not enclose its target.
    #[error("bracket error: {message}")]
    Bracket { message: String },

    /// An iteration failed to converge (derivative step-halving, bisection
    /// budget, non-finite state growth in the time-domain march).
    #[error("convergence error: {message}")]
    Convergence { message: String },

    /// The time window is too short for the requested run (signal not
    /// negligible at the window edges).
    #[error("window error: {message}")]
    Window { message: String },
}

impl Error {
    /// Single-violation validation error.
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation {
            violations: vec![msg.into()],
        }
    }
}
