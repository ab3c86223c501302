use thiserror::Error;

/// Failure modes shared by every module of the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("optimizer did not converge: {0}")]
    OptimizerNotConverged(String),
    #[error("quadrature budget exceeded: {0}")]
    QuadratureBudgetExceeded(String),
    #[error("block structure mismatch: {0}")]
    BlockMismatch(String),
    #[error("argument outside the domain of analyticity: {0}")]
    Domain(String),
    #[error("combinatorial budget exceeded: total degree {total} exceeds cap {cap}")]
    CombinatorialBudgetExceeded { total: usize, cap: usize },
    #[error("series divergent: {0}")]
    SeriesDivergent(String),
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("gram matrix is not positive semidefinite: min eigenvalue {min:e}, max eigenvalue {max:e}")]
    NotPsd { min: f64, max: f64 },
    #[error("degree overflow: {0}")]
    DegreeOverflow(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("translation vector is not spacelike: {0}")]
    NotSpacelike(String),
    #[error("projection residual {residual:e} exceeds limit {limit:e}")]
    ProjectionResidualExceeded { residual: f64, limit: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
