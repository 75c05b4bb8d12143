#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("missing upstream artifact: {0}")]
    MissingUpstream(String),
    #[error("bad flag: {0}")]
    BadFlag(String),
    /// Argument parsing failed; clap has already printed the details.
    #[error("invalid arguments")]
    Usage,
    #[error(transparent)]
    Core(#[from] relspace::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 1 for anything the user can fix by changing inputs or flags, 2 for
    /// everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingUpstream(_) | CliError::BadFlag(_) | CliError::Usage => 1,
            CliError::Core(e) if e.is_validation() => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
