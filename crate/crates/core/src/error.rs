use thiserror::Error;

/// Errors raised by the estimation, diagnostic and reporting layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("design matrix is rank deficient (smallest scaled singular value {smallest_singular_value:.3e}); perfect collinearity")]
    RankDeficient { smallest_singular_value: f64 },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("column index {index} is not a raisable regressor (valid range 1..{p})")]
    InvalidIndex { index: usize, p: usize },

    #[error("raising factor must be nonnegative, got {0}")]
    NegativeLambda(f64),

    #[error("ridge constant must be nonnegative, got {0}")]
    NegativeK(f64),

    #[error("ridge constant must be strictly positive, got {0}")]
    NonPositiveK(f64),

    #[error("column `{0}` has zero mean; coefficient of variation is undefined")]
    ZeroMean(String),

    #[error("column `{0}` has zero variance; correlation is undefined")]
    ZeroVariance(String),

    #[error("estimated coefficient of the raised variable is zero; lambda_min is undefined")]
    ZeroCoefficient,

    #[error("estimated coefficient vector has zero norm")]
    ZeroCoefficientNorm,

    #[error("evaluation grid is empty")]
    EmptyGrid,

    #[error("criterion unattainable: {0}")]
    Unattainable(String),

    #[error("norm of the raise estimator did not stabilize below {tol} within [0, {upper}]")]
    NotStabilized { tol: f64, upper: f64 },

    #[error("matrix expected to be symmetric positive definite is not")]
    NotPositiveDefinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}, column `{column}`: {message}")]
    Parse {
        line: usize,
        column: String,
        message: String,
    },

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("file contains a header but no data rows")]
    EmptyData,

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures caused by the numbers rather than by how the tool was invoked.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::ZeroMean(_)
                | Error::ZeroVariance(_)
                | Error::ZeroCoefficient
                | Error::ZeroCoefficientNorm
                | Error::Unattainable(_)
                | Error::NotStabilized { .. }
                | Error::NotPositiveDefinite
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
