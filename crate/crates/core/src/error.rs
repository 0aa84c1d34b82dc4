use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian: |a[{row}][{col}] - conj(a[{col}][{row}])| = {defect:e}")]
    NotHermitian { row: usize, col: usize, defect: f64 },

    #[error("not a density operator: {0}")]
    NotDensity(String),

    #[error("zero vector has no projector")]
    ZeroVector,

    #[error("eigensolver did not converge after {iterations} iterations (off-diagonal residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("point {index} has non-positive weight {weight}")]
    NonPositiveWeight { index: usize, weight: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("points span a subspace of dimension {rank} < {dim}")]
    NotSpanning { rank: usize, dim: usize },

    #[error("not a fixed point: relative defect {defect:e} exceeds {tolerance:e}")]
    NotFixedPoint { defect: f64, tolerance: f64 },

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("finite-difference step rejected: {0}")]
    FiniteDifference(String),

    #[error("unknown point label `{0}`")]
    UnknownLabel(String),

    #[error("incompatible coupling: {0}")]
    IncompatibleCoupling(String),

    #[error("invalid group data: {0}")]
    InvalidGroup(String),

    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),

    #[error("spectral gap is zero: {0}")]
    ZeroGap(String),

    #[error("POVM is not pure: {0}")]
    NotPure(String),

    #[error("eigenvalue cluster mismatch: {0}")]
    ClusterMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Validation failures (bad input data) as opposed to numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::LengthMismatch { .. }
                | Error::NonFinite { .. }
                | Error::NotHermitian { .. }
                | Error::NotDensity(_)
                | Error::ZeroVector
                | Error::InvalidPovm(_)
                | Error::NonPositiveWeight { .. }
                | Error::UnknownLabel(_)
                | Error::InvalidGroup(_)
                | Error::InvalidRepresentation(_)
                | Error::NotPure(_)
                | Error::NotSpanning { .. }
                | Error::InvalidArgument(_)
                | Error::Json(_)
                | Error::Io(_)
        )
    }
}
