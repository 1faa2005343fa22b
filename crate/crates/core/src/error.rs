use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("charge {index} is zero")]
    ZeroCharge { index: usize },

    #[error("coupling c must be positive, got {0}")]
    NonPositiveCoupling(f64),

    #[error("nonpositive coupling: log argument 2*sqrt(2)*pi*mu/omega_tr = {0} must exceed 1")]
    LogArgument(f64),

    #[error("physical parameter `{name}` must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate vector length {0} is not a perfect square")]
    NotSquareLength(usize),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid state: {0}")]
    InvalidState(#[from] StateViolation),

    #[error("outside the domain of h: {0}")]
    Domain(String),

    #[error("not a relative equilibrium: {0}")]
    NotRelativeEquilibrium(String),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian (numerical rank {rank}, expected at least {expected})")]
    SingularJacobian { rank: usize, expected: usize },

    #[error("eigenvalue computation failed")]
    EigenFailure,

    #[error("unknown closed-form function `{0}`")]
    UnknownClosedForm(String),

    #[error("missing parameter `{0}`")]
    MissingParameter(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Which guard of `validate_state` failed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateViolation {
    #[error("vortex {index} at radius {radius} is outside the admissible disc")]
    Boundary { index: usize, radius: f64 },

    #[error("vortices {first} and {second} are {distance:e} apart (collision)")]
    Collision { first: usize, second: usize, distance: f64 },
}
