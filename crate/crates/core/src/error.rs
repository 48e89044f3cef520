use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid probability mass function: {0}")]
    InvalidPmf(String),

    #[error("{what} = {value} is outside {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("column index overflows: {points}^{exponent} columns")]
    IndexOverflow { points: usize, exponent: usize },

    #[error("budget exceeded: {required:.3e} kernel evaluations requested, budget is {budget:.3e}; use sampled mode or raise the budget")]
    BudgetExceeded { required: f64, budget: f64 },

    #[error("affinity mode not applicable: {0}")]
    Ineligible(String),

    #[error("clustering needs at least 2 points, got {0}")]
    TooFewPoints(usize),

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {deviation:.3e}")]
    NotSymmetric {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("matrix has a negative entry {value:.3e} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("numeric overflow: {0}")]
    Overflow(String),

    #[error("image has {pixels} pixels, exceeding the maximum of {max}")]
    ImageTooLarge { pixels: usize, max: usize },

    #[error("need at least 2 nonempty groups, got {0}")]
    TooFewGroups(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
