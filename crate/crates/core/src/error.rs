use thiserror::Error;

pub type Result<T> = std::result::Result<T, GmebError>;

#[derive(Debug, Error)]
pub enum GmebError {
    #[error("ambient dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix has numerical rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("padded closest-point matrix is rank deficient")]
    DegenerateCompletion,

    #[error("subspace spans the full ambient space (k = n = {n})")]
    FullSpace { n: usize },

    #[error("columns are not orthonormal (max |B^T B - I| = {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("singular value {sigma} of a basis cross product exceeds 1 beyond tolerance")]
    AngleOvershoot { sigma: f64 },

    #[error("vector has no positive entry to normalize")]
    ZeroVector,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite cost at iteration {iteration}")]
    NonFiniteCost { iteration: usize },

    #[error("radius {radius} exceeds the largest squared-chordal distance {max} on Gr(k, n)")]
    RadiusTooLarge { radius: f64, max: f64 },

    #[error("infeasible ball placement: {0}")]
    InfeasiblePlacement(String),

    #[error("orthogonal completion pool exhausted: need {needed}, {available} left")]
    PoolExhausted { needed: usize, available: usize },

    #[error("too few singular values for an elbow fit ({count} < 4)")]
    TooFewValues { count: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl GmebError {
    /// Numerical failures (as opposed to bad input or configuration).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            GmebError::RankDeficient { .. }
                | GmebError::DegenerateCompletion
                | GmebError::AngleOvershoot { .. }
                | GmebError::NonFiniteCost { .. }
        )
    }
}
