use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index ({row}, {col}) out of range for dimension {n}")]
    IndexOutOfRange { row: usize, col: usize, n: usize },

    #[error("matrix is not positive definite: pivot {pivot:e} at column {column}")]
    NotPositiveDefinite { column: usize, pivot: f64 },

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    CgNoConvergence { iterations: usize, residual: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("field does not belong to this mesh")]
    MeshMismatch,

    #[error("degenerate triangle {0}")]
    DegenerateTriangle(usize),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("triangle index {0} out of range")]
    BadMark(usize),

    #[error("triangle {0} is marked for both refinement and coarsening")]
    ConflictingMarks(usize),

    #[error("mesh ratio h_max/h_min = {ratio:.3} exceeds the cap {cap}")]
    RatioGuard { ratio: f64, cap: f64 },

    #[error("shape regularity lost: h/rho = {theta:.3} exceeds {bound:.3}")]
    ShapeRegularity { theta: f64, bound: f64 },

    #[error("vertex patch around {vertex} is rank deficient for a quadratic fit")]
    RankDeficientPatch { vertex: usize },

    #[error("right-hand side f must be positive, got {value} at vertex {vertex}")]
    NonPositiveData { vertex: usize, value: f64 },

    #[error("determinant target must be positive, got {0}")]
    NonPositiveTarget(f64),

    #[error("projection failed at vertices {0:?}")]
    Projection(Vec<usize>),

    #[error("case `{0}` does not provide {1}")]
    MissingData(String, &'static str),

    #[error("unknown case `{0}`")]
    UnknownCase(String),

    #[error("invalid case parameter: {0}")]
    InvalidParameter(String),

    #[error("arc length {s} outside side {side} of length {length}")]
    ArcLengthOutOfRange { side: usize, s: f64, length: f64 },

    #[error("slope fit needs at least two positive points")]
    BadSlopeInput,

    #[error("zero {0} in denominator")]
    ZeroDenominator(&'static str),

    #[error("mesh dump parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
