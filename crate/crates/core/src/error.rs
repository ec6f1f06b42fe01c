use thiserror::Error;

use crate::tensor::Mode;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("duplicate cell ({time}, {instance}, {variable})")]
    DuplicateCell {
        time: String,
        instance: String,
        variable: String,
    },

    #[error("missing {count} cell(s), first: {}", .first.join(", "))]
    MissingCells { count: usize, first: Vec<String> },

    #[error("non-finite value {value} at {location}")]
    NonFinite { value: f64, location: String },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("invalid mode combination: first and second are both {0}")]
    InvalidCombo(Mode),

    #[error("too few rows: {actual} given, at least {minimum} required")]
    TooFewRows { minimum: usize, actual: usize },

    #[error("invalid selection: {0}")]
    InvalidSelection(String),

    #[error("row index {index} out of range for {rows} rows")]
    RowOutOfRange { index: usize, rows: usize },

    #[error("flat unfolding has {columns} columns, above the cap of {cap}")]
    TooManyColumns { columns: usize, cap: usize },

    #[error("job cancelled")]
    Cancelled,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures caused by malformed input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidTensor(_)
                | Error::InvalidDataset(_)
                | Error::DuplicateCell { .. }
                | Error::MissingCells { .. }
                | Error::NonFinite { .. }
                | Error::LengthMismatch { .. }
                | Error::InvalidCombo(_)
                | Error::InvalidSelection(_)
                | Error::RowOutOfRange { .. }
                | Error::TooManyColumns { .. }
                | Error::Io(_)
                | Error::Parse(_)
        )
    }
}
