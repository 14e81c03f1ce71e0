use thiserror::Error;

/// Everything that can go wrong in this crate.
///
/// The variants are grouped by the exit code the command-line front end maps
/// them to: validation problems (1), precision exhaustion (2) and search
/// budgets (3).
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("sequence too short: explicit chain ends at {last} before reaching a term above {needed}")]
    SequenceTooShort { last: String, needed: String },

    #[error("insufficient partial quotients: the explicit continued fraction has {available} quotients")]
    InsufficientPartialQuotients { available: usize },

    #[error("undecidable at precision cap ({cap_bits} bits): {context}")]
    Undecidable { context: String, cap_bits: u32 },

    #[error("undecidable binning for index {index} at precision cap")]
    UndecidableBinning { index: usize },

    #[error("budget exhausted: {0}")]
    Budget(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn undecidable(context: impl Into<String>, cap_bits: u32) -> Self {
        Error::Undecidable {
            context: context.into(),
            cap_bits,
        }
    }

    /// Process exit code used by the `mlcl` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Undecidable { .. } | Error::UndecidableBinning { .. } => 2,
            Error::InsufficientPartialQuotients { .. } => 2,
            Error::Budget(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
