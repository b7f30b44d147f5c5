use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("matrix is rank deficient: pivot {pivot:.3e} at column {column} is below 1e-12")]
    RankDeficient { column: usize, pivot: f64 },

    #[error("spectral entry {index} is ({row}, {col}), outside the {d1}x{d2} grid")]
    EntryOutOfRange {
        index: usize,
        row: usize,
        col: usize,
        d1: usize,
        d2: usize,
    },

    #[error("coefficient count {coeffs} does not match entry count {entries}")]
    CoefficientCountMismatch { coeffs: usize, entries: usize },

    #[error("requested {n} entries but the grid has only {cells} cells")]
    TooManyEntries { n: usize, cells: usize },

    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),

    #[error("all sampling probabilities are zero; the bias spec is degenerate")]
    DegenerateBias,

    #[error("matrix of {cells} cells exceeds the brute-force guard of {limit} cells")]
    BruteForceGuard { cells: usize, limit: usize },

    #[error("unknown model preset '{0}'")]
    UnknownPreset(String),

    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("checkpoint has bad magic bytes")]
    BadMagic,

    #[error("checkpoint version {0} is not supported")]
    UnsupportedVersion(u16),

    #[error("checkpoint is truncated: {0}")]
    Truncated(String),

    #[error("checkpoint layer '{name}' has out-of-range dimensions {d1}x{d2}")]
    BadDimensions { name: String, d1: u32, d2: u32 },

    #[error("inconsistent layer configuration: {0}")]
    InconsistentLayers(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
