use thiserror::Error;

/// Errors produced anywhere in the estimation, testing and simulation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("group {0} has no observations")]
    OneGroupEmpty(u8),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("density grids do not share the same support points")]
    GridMismatch,

    #[error("tuning parameters {alpha}, {lambda}, {beta} sit on a limit manifold (A = {a}, B = {b})")]
    LimitCase {
        alpha: f64,
        lambda: f64,
        beta: f64,
        a: f64,
        b: f64,
    },

    #[error("null variance is not positive (sigma^2 = {0})")]
    DegenerateVariance(f64),

    #[error("contamination policy cannot be realized: {0}")]
    PolicyDomain(String),

    #[error("power-divergence candidates need permutation calibration; opt in to use the asymptotic rule")]
    PowerDivergenceAsymptotic,

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
