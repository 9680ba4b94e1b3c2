use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no tangent-magnitude pair satisfies the turning radius bound (best max curvature {best_curvature:.6} 1/m, limit {limit:.6} 1/m)")]
    Infeasible { best_curvature: f64, limit: f64 },

    #[error("first derivative vanishes at u = {u}")]
    DegenerateDerivative { u: f64 },

    #[error("pseudo-work window of {window} s needs history from t = {needed}, first sample is at {first}")]
    InsufficientHistory { window: f64, needed: f64, first: f64 },

    #[error("state timeline is empty")]
    EmptyTimeline,

    #[error("trial log is empty")]
    EmptyLog,

    #[error("path planning failed: {0}")]
    PlanInfeasible(Box<Error>),

    #[error("non-finite state at t = {t} s ({what})")]
    NumericalDivergence { t: f64, what: &'static str },

    #[error("{condition} driver {driver} phase {phase} trial {trial}: {source}")]
    Trial {
        condition: char,
        driver: usize,
        phase: &'static str,
        trial: usize,
        source: Box<Error>,
    },

    #[error("line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("environment variable {var}: {message}")]
    Env { var: String, message: String },

    #[error("csv: {0}")]
    Csv(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
