use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or norm that the operation needs does not converge.
    #[error("divergent series: {0}")]
    Divergence(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("incomplete input: {0}")]
    IncompleteInput(String),

    /// A parameter vector or configuration violates its constraints.
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("index {index} out of range 1..={max}")]
    Index { index: usize, max: usize },

    #[error("insufficient history: {0}")]
    History(String),

    #[error("degenerate window: {0}")]
    DegenerateWindow(String),

    #[error("non-finite value at t = {t}: {what}")]
    Numeric { t: usize, what: String },

    #[error("combinatorial budget exceeded: {needed} > {cap}")]
    Budget { needed: u64, cap: u64 },

    #[error("matrix is not positive definite ({which}); eigenvalues {eigenvalues:?}")]
    NearSingular {
        which: &'static str,
        eigenvalues: [f64; 3],
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
