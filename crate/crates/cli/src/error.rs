use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] vsrd::Error),
    #[error("soundness violation: {0}")]
    Soundness(String),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Library(e) if e.is_input_error() => 2,
            CliError::Library(_) => 3,
            CliError::Soundness(_) => 4,
            CliError::Io { .. } => 1,
        }
    }
}
