use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Qubit index, gate wiring or register size out of range.
    #[error("structural error: {0}")]
    Structural(String),

    /// A caller-supplied value violates an operation's precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// Invalid run configuration (bad flag values, empty protocol list, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Input file does not have the expected columns.
    #[error("schema error: {0}")]
    Schema(String),

    /// Input parsed but yielded no usable data, or a strict-mode row was rejected.
    #[error("data error: {0}")]
    Data(String),

    #[error("insufficient CHSH samples for setting pair (alice={alice}, bob={bob})")]
    InsufficientSamples { alice: usize, bob: usize },

    #[error("record {row_index} has no key material")]
    NoKey { row_index: u64 },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error class.
    ///
    /// | code | meaning |
    /// |------|---------|
    /// | 1    | internal / unexpected |
    /// | 2    | configuration |
    /// | 3    | I/O |
    /// | 4    | schema |
    /// | 5    | data |
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Input(_) => 2,
            Error::Io { .. } => 3,
            Error::Schema(_) => 4,
            Error::Data(_) | Error::NoKey { .. } => 5,
            Error::Csv(e) if e.is_io_error() => 3,
            Error::Csv(_) => 4,
            Error::Structural(_) | Error::InsufficientSamples { .. } | Error::Json(_) => 1,
        }
    }
}
