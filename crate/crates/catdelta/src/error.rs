//! Error type shared across the crate.

use thiserror::Error;

/// Coarse classification used by callers (the CLI maps these to exit codes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed input, shape mismatches, bad indices.
    Data,
    /// Numeric domain violations (singular denominators, zero marginals,
    /// unseen categories, non-symmetric inputs where symmetry is required).
    Domain,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("empty table")]
    EmptyTable,

    #[error("missing value at row {row}, column '{column}'")]
    MissingValue { row: usize, column: String },

    #[error("row index {index} out of range (n_rows = {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("empty row selection")]
    EmptySelection,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("response variable has a single class")]
    SingleClass,

    #[error("invalid fold count {n_folds} for {n_rows} rows")]
    FoldCount { n_folds: usize, n_rows: usize },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("no response variable marked on the dataset")]
    NoResponse,

    #[error("variable '{variable}': level '{level}' is unobserved")]
    UnobservedLevel { variable: String, level: String },

    #[error("profile block requires two distinct variables (got {index} twice)")]
    DiagonalProfile { index: usize },

    #[error(
        "Lin dissimilarity is singular for variable '{variable}': \
         p('{cat_a}') + p('{cat_b}') = 1 makes the denominator log(1) = 0 \
         (set a positive lin_guard to clamp)"
    )]
    LinSingularity {
        variable: String,
        cat_a: String,
        cat_b: String,
    },

    #[error("variable '{variable}' is constant (single category)")]
    ConstantVariable { variable: String },

    #[error("zero marginal proportion for variable '{variable}', level '{level}'")]
    ZeroMarginal { variable: String, level: String },

    #[error("KL divergence is infinite: zero profile entry with kl_floor = 0")]
    KlZeroEntry,

    #[error("association-based dissimilarities need at least two variables")]
    NeedsMultipleVariables,

    #[error(
        "category '{level}' of variable '{variable}' was not observed in the \
         data the dissimilarity matrix was built from (unseen_policy = error)"
    )]
    UnseenCategory { variable: String, level: String },

    #[error("k = {k} exceeds the number of available rows ({n})")]
    KTooLarge { k: usize, n: usize },

    #[error("distance matrix is not symmetric; symmetrize it explicitly first")]
    NonSymmetric,

    #[error("{what} exceeds the supported limit of {limit}")]
    GuardExceeded { what: String, limit: usize },

    #[error("provenance mismatch: {0}")]
    ProvenanceMismatch(String),

    #[error("invalid weight matrix: {0}")]
    InvalidWeights(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::LinSingularity { .. }
            | Error::ZeroMarginal { .. }
            | Error::KlZeroEntry
            | Error::UnseenCategory { .. }
            | Error::UnobservedLevel { .. }
            | Error::NonSymmetric => ErrorKind::Domain,
            _ => ErrorKind::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
