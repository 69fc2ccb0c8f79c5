use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("order exhausted: {0}")]
    OrderExhausted(String),

    #[error("singular series: constant term is zero")]
    SingularSeries,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("hermitian constraint violated at frequency {freq:?}: {detail}")]
    Hermitian { freq: Vec<i32>, detail: String },

    #[error("metric is not positive definite at x = {point:?} (min eigenvalue {min_eig:e})")]
    Positivity { point: Vec<f64>, min_eig: f64 },

    #[error("incompatible request: {0}")]
    Incompatible(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("flow halted at t = {t} (step {step}): {reason}")]
    FlowHalt { t: f64, step: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
