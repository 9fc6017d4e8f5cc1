use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input")]
    EmptyInput,

    #[error("dimension mismatch: expected {expected}, found {found}{}", line_suffix(*.line))]
    DimensionMismatch {
        expected: usize,
        found: usize,
        line: Option<usize>,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("resolution exhausted: level {level} is below the minimum level {min_level}")]
    ResolutionExhausted { level: i32, min_level: i32 },

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("parameters too coarse: {0}")]
    ParametersTooCoarse(String),

    #[error("resource limit exceeded: {0}")]
    ResourceExhausted(String),

    #[error("bad sketch file: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn line_suffix(line: Option<usize>) -> String {
    match line {
        Some(l) => format!(" at line {l}"),
        None => String::new(),
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
