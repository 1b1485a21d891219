use thiserror::Error;

/// Errors produced by the collapse model and its drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("branch index {index} out of range for {len} branches")]
    BranchOutOfRange { index: usize, len: usize },

    #[error("collapse strength k = {0} outside [0, 1]")]
    StrengthOutOfRange(f64),

    #[error("energy uncertainty must be non-negative, got {0}")]
    NegativeEnergyUncertainty(f64),

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("resource budget exceeded: {context} needs {needed}, budget is {budget}")]
    BudgetExceeded {
        context: &'static str,
        needed: u64,
        budget: u64,
    },

    #[error("cross moment requested for the diagonal pair ({0}, {0})")]
    DiagonalPair(usize),

    #[error("unit mismatch: {0}")]
    UnitMismatch(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("no collapse: {0}")]
    NoCollapse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
