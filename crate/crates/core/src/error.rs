use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid base system: {0}")]
    InvalidSystem(String),

    #[error("invalid base point: {0}")]
    InvalidPoint(String),

    #[error("bracket requested for points at distance {dist} > tau = {tau}")]
    BracketOutOfRange { dist: f64, tau: f64 },

    #[error("splice {from} -> {to} is not an admissible transition")]
    InadmissibleSplice { from: usize, to: usize },

    #[error("no su-path connects the two points: {0}")]
    NoPath(String),

    #[error("enumeration needs {count} points, budget is {budget}")]
    BudgetExceeded { count: u64, budget: u64 },

    #[error("orbit segment not closed enough: d(f^n z, z) = {dist} >= {epsilon0}")]
    NotCloseEnough { dist: f64, epsilon0: f64 },

    #[error("shadowing bound violated at j = {j}: {measured} > {bound}")]
    ShadowingBoundViolated { j: usize, measured: f64, bound: f64 },

    #[error("monotonicity lost (min grid increment {min_step:e}); grid too coarse")]
    MonotonicityLost { min_step: f64 },

    #[error("points are not on a common {leaf} set: {reason}")]
    NotOnSameLeaf { leaf: &'static str, reason: String },

    #[error("holonomy did not converge: {0}")]
    NoConvergence(String),

    #[error("point is not homoclinic to the anchor: {0}")]
    NotHomoclinic(String),

    #[error("periodic orbit condition violated: max deviation {max_deviation:e} > {tol:e}")]
    PocViolated { max_deviation: f64, tol: f64 },

    #[error("point is not periodic with period {0}")]
    NotPeriodic(u64),

    #[error("no witness satisfies the one-step equation (best residual {best_residual:e})")]
    WitnessFailed { best_residual: f64 },

    #[error("invalid configuration at `{field}`: {message}")]
    ConfigInvalid { field: String, message: String },

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
