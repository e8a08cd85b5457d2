use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("exact enumeration over {states_log2} binary units is intractable (limit {limit_log2})")]
    Intractable { states_log2: usize, limit_log2: usize },

    #[error("no valid placement: {reason}; blocking faulty qubits: {blocking:?}")]
    Placement {
        reason: String,
        blocking: Vec<usize>,
    },

    #[error("invalid embedding: {0}")]
    Embedding(String),

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { what, expected, got })
    }
}
