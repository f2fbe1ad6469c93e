use thiserror::Error;

/// Every failure the engine can report.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("capacity exhausted in layer `{layer}` ({size} neurons)")]
    Capacity { layer: String, size: usize },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("phrase too long: {words} words, at most {max} words in the current implementation")]
    Length { words: usize, max: usize },
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("goal stack error: {0}")]
    Stack(String),
    #[error("the state-action network has no trained neurons")]
    PolicyEmpty,
    #[error("protocol error: unknown command `{0}`")]
    Protocol(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("snapshot version mismatch: file has version {found}, this build reads version {expected}")]
    Version { found: u32, expected: u32 },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
