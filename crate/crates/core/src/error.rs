use thiserror::Error;

/// Errors surfaced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("ill-conditioned system (condition estimate {0:.3e})")]
    IllConditioned(f64),

    #[error("LDPC construction failed after {0} attempts")]
    CodeConstruction(usize),

    #[error("trace: bad magic or malformed header: {0}")]
    MalformedHeader(String),

    #[error("trace: truncated payload (expected {expected} bytes, got {actual})")]
    Truncated { expected: usize, actual: usize },

    #[error("trace: dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("trace: parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error("analysis: {0}")]
    Analysis(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
