use std::path::Path;

/// Top-level CLI error; the process exits with 2 on config errors and 3
/// on runtime errors.
#[derive(thiserror::Error, Debug)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn io(context: &str, path: &Path, err: std::io::Error) -> Self {
        CliError::Runtime(format!("{context} {}: {err}", path.display()))
    }
}

impl From<sfd_core::Error> for CliError {
    fn from(e: sfd_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
