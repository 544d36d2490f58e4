use std::path::PathBuf;
use teukolsky::registry::UnknownStrategy;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("failed to parse {}: {msg}", path.display())]
    Parse { path: PathBuf, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] teukolsky::Error),
    #[error(transparent)]
    Unknown(#[from] UnknownStrategy),
}
