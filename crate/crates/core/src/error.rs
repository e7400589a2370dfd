use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alist line {line}: {msg}")]
    Alist { line: usize, msg: String },

    #[error("{what}: expected length {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("entry {value} at position {index} is not a bit")]
    NonBinary { index: usize, value: u8 },

    #[error("parity-check matrix has rank n, the code dimension is zero")]
    ZeroDimension,

    #[error("code dimension {k} exceeds the enumeration limit of {limit}")]
    DimensionTooLarge { k: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("variable node {0} is already decimated")]
    AlreadyDecimated(usize),

    #[error("every variable node is excluded")]
    AllExcluded,

    #[error("learned decimation needs a decode result on the branch")]
    MissingDecode,

    #[error("candidate list is empty")]
    EmptyCandidates,

    #[error("{0}")]
    Format(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            what,
            expected,
            actual,
        })
    }
}
