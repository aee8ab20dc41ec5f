use qar_core::Error as CoreError;
use thiserror::Error;

/// Exit code for a successful run.
pub const EXIT_OK: u8 = 0;
/// Exit code for runtime failures that are not configuration problems.
pub const EXIT_FAILURE: u8 = 1;
/// Exit code for invalid flags or configuration files.
pub const EXIT_CONFIG: u8 = 2;
/// Exit code when no parameter point satisfies the optimization constraints.
pub const EXIT_INFEASIBLE: u8 = 3;
/// Exit code when the time horizon is too short for a damping verdict.
pub const EXIT_HORIZON: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("output error: {0}")]
    Csv(#[from] csv::Error),

    #[error("metadata error: {0}")]
    Metadata(#[from] toml::ser::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// The reader closed stdout early, e.g. `qar heat ... | head`.
    pub fn is_broken_pipe(&self) -> bool {
        let io = match self {
            CliError::Io(e) => Some(e),
            CliError::Csv(e) => match e.kind() {
                csv::ErrorKind::Io(e) => Some(e),
                _ => None,
            },
            _ => None,
        };
        io.is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(e) => match e {
                CoreError::EmptyFeasibleSet => EXIT_INFEASIBLE,
                CoreError::InsufficientHorizon { .. } => EXIT_HORIZON,
                CoreError::InvalidParameter { .. } | CoreError::GammaPlusNonpositive(_) => EXIT_CONFIG,
                _ => EXIT_FAILURE,
            },
            _ => EXIT_FAILURE,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
