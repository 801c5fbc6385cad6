use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid number `{0}`")]
pub struct ParseNumberError(pub String);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vertex index {index} out of range (n = {n})")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid framework: {0}")]
    InvalidFramework(String),

    #[error("determinant of the pencil vanishes identically")]
    ZeroCubic,

    #[error("cubic is singular (discriminant is zero)")]
    Singular,

    #[error("no real Hesse parameter matches the invariant signs: {0}")]
    NoRealSelection(String),

    #[error("could not isolate three real inflection points: {0}")]
    InflectionFailure(String),

    #[error("gradient vanishes at the point (singular point)")]
    SingularPoint,

    #[error("curve is not two-component (k = {0}); Hesse normalization refused")]
    NotTwoComponents(f64),

    #[error("pullback check failed: max relative deviation {0:e}")]
    VerifyFailed(f64),

    #[error("certificate residual {0:e} exceeds tolerance")]
    ResidualExceeded(f64),

    #[error("Newton projection did not converge (residual {0:e})")]
    ProjectionDiverged(f64),

    #[error("framework is not auxetic at the starting configuration: {0}")]
    NotAuxeticAtStart(String),

    #[error("{location}: {message}")]
    Document { location: String, message: String },

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
