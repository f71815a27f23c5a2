use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScarError {
    /// No configuration of `l` spin-1 sites has total magnetization `m`.
    #[error("empty sector: |M| = {m} exceeds L = {l}")]
    EmptySector { l: usize, m: i64 },

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("sector mismatch: {0}")]
    SectorMismatch(String),

    /// Dense diagonalization was requested above the configured cap.
    #[error(
        "sector dimension {dim} exceeds the dense cap {cap}; use Krylov time evolution \
         (krylov_evolve) or a stochastic trace instead of full diagonalization"
    )]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("Krylov iteration did not converge: {0}")]
    KrylovNonConvergence(String),

    /// Local exponential inside an MPS sweep failed to converge.
    #[error("local Krylov exponential did not converge at site {site}: {reason}")]
    LocalKrylov { site: usize, reason: String },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("logarithm branch point: 1 + conj(zeta') zeta = 0")]
    BranchPoint,

    /// Densities 0 and 1 correspond to the fully polarized states.
    #[error("scar density {0} must lie strictly inside (0, 1)")]
    BoundaryDensity(f64),

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("analysis refused: {0}")]
    Analysis(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type ScarResult<T> = Result<T, ScarError>;
