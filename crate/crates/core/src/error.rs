use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("operator is not Hermitian (max anti-Hermitian residue {0:.3e})")]
    NonHermitian(f64),

    #[error("fragment {fragment} failed the parity check: only {weight:.6} of its weight has the expected electron-number parity")]
    Parity { fragment: usize, weight: f64 },

    #[error("optimizer failure: {0}")]
    Optimizer(String),

    #[error("unsupported gate for this operation: {0}")]
    UnsupportedGate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
