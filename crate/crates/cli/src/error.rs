use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const VERIFICATION_FAILED: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const BUDGET: i32 = 3;
    pub const SIZE_GUARD: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] msc_core::Error),

    #[error("{0} verification case(s) failed")]
    Verification(usize),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Verification(_) => exit::VERIFICATION_FAILED,
            Self::Core(msc_core::Error::BudgetExceeded { .. }) => exit::BUDGET,
            Self::Core(msc_core::Error::ImageTooLarge { .. }) => exit::SIZE_GUARD,
            _ => exit::INPUT,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
