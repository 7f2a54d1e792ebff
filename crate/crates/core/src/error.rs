//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while loading data or computing distances.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// A cell declared numeric failed to parse. Rows are counted from 1,
    /// excluding the header.
    #[error("column '{column}', row {row}: cannot parse '{value}' as a number")]
    NumericParse {
        column: String,
        row: usize,
        value: String,
    },

    /// Empty cells are rejected outright; there is no missing-value handling.
    #[error("column '{column}', row {row}: missing value")]
    MissingValue { column: String, row: usize },

    #[error("schema column '{0}' not found in the CSV header")]
    ColumnNotFound(String),

    #[error("need at least two data rows, found {0}")]
    TooFewRows(usize),

    #[error("categorical column '{0}' has a single observed level")]
    SingleLevel(String),

    /// Strict proportions and conditional distributions require every declared
    /// level to be observed at least once.
    #[error("level '{level}' of column '{column}' has zero observations")]
    EmptyLevel { column: String, level: String },

    /// A numeric column whose scaling denominator vanishes (zero standard
    /// deviation, zero range, zero interquartile range, ...).
    #[error("column '{column}' is degenerate: {reason}")]
    DegenerateColumn { column: String, reason: String },

    /// Math-level degeneracy not tied to a named column.
    #[error("{0}")]
    Degenerate(String),

    /// Inverse occurrence frequency is undefined once a level's expected count
    /// drops below one (its log factor changes sign).
    #[error("inverse OF dissimilarity undefined: level '{level}' has n*p = {np} < 1")]
    IofGuard { level: String, np: f64 },

    #[error("association-based dissimilarity needs at least two categorical variables")]
    NoAssociationPartner,

    #[error("eigensolver did not converge within the iteration budget")]
    NoConvergence,

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
