use crate::pseries::Index;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("singular evaluation: a denominator vanishes")]
    Singular,
    #[error("domain touches a singular hyperplane")]
    SingularDomain,
    #[error("series is not hermitian at index {0:?}")]
    NotHermitian(Index),
    #[error("index {0:?} is identically resonant")]
    IdenticallyResonant(Index),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("degenerate quadratic: the construction collapsed to a rational")]
    DegenerateQuadratic,
    #[error("frequency inversion did not converge")]
    NoConvergence,
    #[error("resonant: alpha = {0:e} is below tolerance")]
    Resonant(f64),
    #[error("transformation is not near-identity: displacement {0:e}")]
    NotNearIdentity(f64),
    #[error("term budget exceeded ({0} terms)")]
    TermBudget(usize),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
