use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input outside the supported domain: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("key slot mismatch: {0} vs {1}")]
    SlotMismatch(usize, usize),

    #[error("key chain has no slot {0}")]
    MissingSlot(usize),

    #[error("word width mismatch: {0} vs {1}")]
    WidthMismatch(usize, usize),

    #[error("trapdoor inversion failed: {0}")]
    InversionFailed(String),

    #[error("gaussian support mismatch")]
    SupportMismatch,

    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("qubit index {0} out of range")]
    QubitRange(usize),

    #[error("noise budget exhausted at NAND depth {0}")]
    NoiseBudget(u32),

    #[error("operation unsupported: {0}")]
    Unsupported(String),

    #[error("decode error: {0}")]
    Decode(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
