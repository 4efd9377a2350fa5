//! File formats, artifact writers and the `hjj` command line on top of
//! `hjj-core`.

pub mod cli;
pub mod config;
pub mod output;
pub mod run;

pub use cli::{Cli, Command, RunOptions};
pub use run::{execute, run};

/// Failure of a command-line run, mapped onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] hjj_core::Error),
}

impl RunError {
    /// 1 for configuration problems, 2 for violated assumptions, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        use hjj_core::Error as E;
        match self {
            RunError::Parse { .. } | RunError::Config(_) | RunError::Io(_) => 1,
            RunError::Validation(_) => 2,
            RunError::Core(e) => match e {
                E::FluxLimiterBelowFloor { .. }
                | E::NotConvex { .. }
                | E::BracketFailure { .. }
                | E::NoAdmissibleControl { .. } => 2,
                E::CflViolation { .. } | E::NonFinite { .. } | E::BudgetExceeded { .. } | E::NegativeKn { .. } => 3,
                _ => 1,
            },
        }
    }
}
