use thiserror::Error;

/// Errors raised by the library. Each variant maps onto one CLI error
/// category through [`Error::category`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("observation {row}: feature dimension {found}, expected {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("observation {row}: label {label:?} is not in the response space")]
    LabelOutsideSpace { row: usize, label: String },

    #[error("label alphabet is empty")]
    EmptyLabelAlphabet,

    #[error("label alphabet contains duplicate label {0:?}")]
    DuplicateLabel(String),

    #[error("invalid response space: {0}")]
    InvalidSpace(String),

    #[error("response kind does not match the response space: {0}")]
    SpaceMismatch(String),

    #[error("insufficient data: need at least {needed} rows, have {have}")]
    InsufficientData { needed: usize, have: usize },

    #[error("singular design matrix in ridge fit")]
    SingularDesign,

    #[error("nearest-neighbour score needs at least two rows, have {0}")]
    FewerThanTwoRows(usize),

    #[error("invalid alpha {0}: must lie in [0, 1]")]
    InvalidAlpha(f64),

    #[error("contour already adjusted ({0})")]
    AlreadyAdjusted(&'static str),

    #[error("random set has no non-empty focal set")]
    NoNonemptyFocalSet,

    #[error("non-positive hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("invalid candidate grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("file not found: {0}")]
    FileNotFound(String),

    #[error("malformed CSV: {0}")]
    BadCsv(String),
}

/// Coarse error classes used for exit codes and machine-readable messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    BadFlags,
    BadCsv,
    MathError,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::BadFlags => "bad-flags",
            ErrorCategory::BadCsv => "bad-csv",
            ErrorCategory::MathError => "math-error",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::BadFlags => 1,
            ErrorCategory::BadCsv => 2,
            ErrorCategory::MathError => 3,
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::DimensionMismatch { .. }
            | Error::LabelOutsideSpace { .. }
            | Error::EmptyLabelAlphabet
            | Error::DuplicateLabel(_)
            | Error::SpaceMismatch(_)
            | Error::FileNotFound(_)
            | Error::BadCsv(_) => ErrorCategory::BadCsv,
            Error::InsufficientData { .. }
            | Error::SingularDesign
            | Error::FewerThanTwoRows(_)
            | Error::AlreadyAdjusted(_)
            | Error::NoNonemptyFocalSet => ErrorCategory::MathError,
            Error::InvalidSpace(_)
            | Error::InvalidAlpha(_)
            | Error::InvalidHyperparameter(_)
            | Error::InvalidGrid(_)
            | Error::InvalidArgument(_) => ErrorCategory::BadFlags,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
