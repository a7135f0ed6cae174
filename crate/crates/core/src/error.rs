use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("training data must contain both classes")]
    SingleClass,

    #[error("nu = {nu} is infeasible: must satisfy 0 < nu <= 2*min(n+, n-)/n = {bound}")]
    InfeasibleNu { nu: f64, bound: f64 },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("expected exactly two classes in label column, found {0}")]
    ClassCount(usize),

    #[error("class {label} has {count} samples; at least {required} needed")]
    ClassTooSmall {
        label: i8,
        count: usize,
        required: usize,
    },

    #[error("cannot parse {value:?} in column {column:?} (row {row})")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("no non-zero differences between paired scores")]
    NoNonZeroDifferences,

    #[error("{found} non-zero differences; at least {required} needed")]
    TooFewDifferences { found: usize, required: usize },

    #[error("classes are not separable by a hard margin within the multiplier bound")]
    NotSeparable,

    #[error("every grid cell failed")]
    AllCellsFailed,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors originating in the optimization layer rather than in
    /// the data or the caller's arguments.
    pub fn is_solver_error(&self) -> bool {
        matches!(self, Error::InfeasibleNu { .. } | Error::NotSeparable | Error::AllCellsFailed)
    }

    /// True for errors caused by malformed or unsuitable data files.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::EmptyDataset(_)
                | Error::ClassCount(_)
                | Error::ClassTooSmall { .. }
                | Error::Parse { .. }
                | Error::Schema(_)
                | Error::SingleClass
                | Error::DimensionMismatch { .. }
                | Error::Csv(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
