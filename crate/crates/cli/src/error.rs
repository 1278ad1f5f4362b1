use thiserror::Error;

/// Exit codes of the `qfluid` binary.
pub const EXIT_OK: i32 = 0;
pub const EXIT_AUDIT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_USAGE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Core(#[from] qfluid_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) | CliError::Validation(_) => EXIT_USAGE,
            CliError::Core(
                qfluid_core::Error::Invalid(_)
                | qfluid_core::Error::EmptyCandidates
                | qfluid_core::Error::MixedInitialData { .. },
            ) => EXIT_USAGE,
            CliError::Core(qfluid_core::Error::AuditFailed { .. }) => EXIT_AUDIT,
            CliError::Core(_) | CliError::Io(_) => EXIT_SOLVER,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Parse(_) => "parse",
            CliError::Validation(_) => "validation",
            CliError::Core(_) => "core",
            CliError::Io(_) => "io",
        }
    }
}
