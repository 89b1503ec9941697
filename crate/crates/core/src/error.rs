use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("superluminal frame: |beta| = {0} must be < 1")]
    Superluminal(f64),

    #[error("hyperplane normal is not unit: contract(n, n) = {0}")]
    NonUnitNormal(f64),

    #[error("lightlike normal cannot define a detection hyperplane")]
    LightlikeNormal,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("plane kind mismatch: expected {expected}, found {found}")]
    WrongPlaneKind {
        expected: &'static str,
        found: &'static str,
    },

    #[error("operands live on different grids or hyperplanes")]
    GridMismatch,

    #[error("hyperplane does not match the grid of the states")]
    PlaneMismatch,

    #[error("degenerate |k_sigma| = {0:e} at the cutoff")]
    DegenerateNormal(f64),

    #[error("reference axis is parallel to k (|axis x k| = {0:e})")]
    DegenerateAxis(f64),

    #[error("mode is evanescent; polarization basis undefined")]
    Evanescent,

    #[error("packet support violation: {0}")]
    Support(String),

    #[error("zero state cannot be normalized")]
    ZeroState,

    #[error("point {0:?} does not lie on the hyperplane")]
    OffPlane([f64; 4]),

    #[error("continuation grows exponentially toward the target point (mode decays on the other side)")]
    Growth,

    #[error("input is too broadband: bandwidth/center = {ratio:.4} exceeds {limit}")]
    Broadband { ratio: f64, limit: f64 },

    #[error("detector array: {0}")]
    Array(String),

    #[error("empty distribution: total probability is zero")]
    EmptyDistribution,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
