use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("depth {0} exceeds the {max} coordinate cap", max = crate::MAX_DEPTH)]
    DepthOverflow(usize),

    #[error("operation would produce a table below depth 1")]
    DepthUnderflow,

    #[error("depth must be at least 1")]
    ZeroDepth,

    #[error("value table has length {got}, expected {expected} for depth {depth}")]
    TableLength {
        depth: usize,
        expected: usize,
        got: usize,
    },

    #[error("word length mismatch: {0} vs {1}")]
    WordLength(usize, usize),

    #[error("invalid binary word {0:?}")]
    BadWord(String),

    #[error("measure weights sum to {0}, expected 1")]
    NotNormalized(f64),

    #[error("negative weight {0} in measure")]
    NegativeWeight(f64),

    #[error("invalid exponent p = {0}; p must lie in [1, +inf]")]
    BadExponent(f64),

    #[error("conditioning level {n} exceeds function depth {depth}")]
    LevelTooDeep { n: usize, depth: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("depth {depth} is insufficient, need at least {need}")]
    InsufficientDepth { depth: usize, need: usize },

    #[error("transfer matrix for lambda = inf is handled by the max-plus path")]
    InfiniteLambda,

    #[error("period must be nonempty")]
    EmptyPeriod,

    #[error("supplies are unbalanced by {0}")]
    Unbalanced(f64),

    #[error("marginals are infeasible")]
    Infeasible,

    #[error("non-stochastic parameter: {0}")]
    BadStochastic(String),

    #[error("iteration cap {cap} exceeded; bracket width {width}")]
    NoConvergence { cap: usize, width: f64 },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
