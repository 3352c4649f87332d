use std::path::PathBuf;

/// Failures surfaced by the command layer, each with its own exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("{failed} of {total} clips failed; see {}", report.display())]
    PartialExtraction {
        failed: usize,
        total: usize,
        report: PathBuf,
    },
}

impl CliError {
    pub const EXIT_CONFIG: i32 = 3;
    pub const EXIT_DATA: i32 = 4;
    pub const EXIT_PARTIAL: i32 = 5;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => Self::EXIT_CONFIG,
            CliError::Data(_) => Self::EXIT_DATA,
            CliError::PartialExtraction { .. } => Self::EXIT_PARTIAL,
        }
    }

    pub(crate) fn data(context: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{context}: {err}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
