use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unstable subset: |S| = {size} with n = {n} (need 2 <= |S| <= n - 2)")]
    Stability { size: usize, n: usize },

    #[error("point count n = {0} outside the supported range 4..=16")]
    PointCount(usize),

    #[error("parse error at position {position}: unexpected {token:?} ({reason})")]
    Parse {
        token: String,
        position: usize,
        reason: String,
    },

    #[error("invalid stratum: {0}")]
    InvalidStratum(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("unsupported degree: (n, k) = ({n}, {k})")]
    UnsupportedDegree { n: usize, k: usize },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("class is not in the span of the basis (first stray stratum: {0})")]
    InconsistentClass(String),

    #[error("basis is not a basis of the quotient: {0}")]
    InvalidBasis(String),

    #[error("characteristic polynomial has a non-integral coefficient at degree {degree}: {value}")]
    NonIntegralCharPoly { degree: usize, value: String },

    #[error("root iteration did not converge after {iterations} steps (max correction {last_step:e})")]
    Convergence { iterations: usize, last_step: f64 },

    #[error("{} permutation(s) have a degree matching no tabulated value: {}", .0.len(), .0.join("; "))]
    UnmatchedDegree(Vec<String>),

    #[error("cache file {path}: {reason}")]
    Cache { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
