use thiserror::Error;

pub type Result<T, E = PackError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PackError {
    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("rectangle {id} has a non-positive side")]
    NonPositiveSide { id: usize },

    #[error("box sides must be positive")]
    NonPositiveBox,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("rectangle ids must be unique and contiguous from 1 (offending id {0})")]
    BadIds(usize),

    #[error("layout has {got} placements but the instance has {expected} rectangles")]
    CardinalityMismatch { expected: usize, got: usize },

    #[error("expected {expected} variables, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("truncation order must be at least 1")]
    InvalidTruncation,

    #[error("rotatable mode requires an instance that allows rotation")]
    ModeMismatch,

    #[error("value is not an integer: {0}")]
    NonInteger(f64),

    #[error("box has {cells} cells, the oracle budget is {budget}")]
    CellBudget { cells: u64, budget: u64 },

    #[error("not a rational number: {0:?}")]
    NonRational(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
