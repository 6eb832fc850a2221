//! CLI failure classes and their exit codes.
//!
//! Each class maps to a distinct exit code so scripts can branch on the
//! status alone; the full message is also emitted as one machine-readable
//! JSON object on stderr (see [`CliError::error_json`]).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration: parse errors, unit errors, unknown keys, or
    /// physical invariant violations. Exit 3.
    #[error("{0}")]
    Config(String),

    /// A structurally valid problem failed numerically (bracketing or
    /// convergence). Exit 4.
    #[error("{0}")]
    Numerics(String),

    /// The configured time window cannot hold the requested run. Exit 5.
    #[error("{0}")]
    Window(String),

    /// Filesystem failure (unwritable output directory, unreadable config).
    /// Exit 6.
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn class(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerics(_) => "numerics",
            CliError::Window(_) => "window",
            CliError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Numerics(_) => 4,
            CliError::Window(_) => 5,
            CliError::Io(_) => 6,
        }
    }

    /// One-line machine-readable error object for stderr.
    pub fn error_json(&self) -> String {
        let obj = serde_json::json!({
            "error": {
                "class": self.class(),
                "exit_code": self.exit_code(),
                "message": self.to_string(),
            }
        });
        obj.to_string()
    }
}

impl From<slowlight::Error> for CliError {
    fn from(e: slowlight::Error) -> Self {
        match &e {
            slowlight::Error::Validation { .. } => CliError::Config(e.to_string()),
            slowlight::Error::Bracket { .. } | slowlight::Error::Convergence { .. } => {
                CliError::Numerics(e.to_string())
            }
            slowlight::Error::Window { .. } => CliError::Window(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
