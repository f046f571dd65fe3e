use thiserror::Error;

/// Errors raised by constructors and estimators.
#[derive(Debug, Error)]
pub enum DilatioError {
    #[error("invalid body parameters: {0}")]
    InvalidBody(String),

    #[error("invalid measure parameters: {0}")]
    InvalidMeasure(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("quasi-convexity violation at x = {x:?}: negative difference quotient {quotient}")]
    QuasiConvexityViolation { x: Vec<f64>, quotient: f64 },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("sampler diagnostic: {0}")]
    Sampler(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, DilatioError>;
