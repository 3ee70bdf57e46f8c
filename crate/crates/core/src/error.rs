use thiserror::Error;

/// Errors raised by the library.
///
/// Variants are grouped so that callers (the CLI in particular) can map them
/// onto exit codes: input problems are [`Error::is_validation`], everything
/// else is a numerical failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("window [{start}, {end}] is not covered by samples on [{first}, {last}]")]
    WindowNotCovered {
        start: f64,
        end: f64,
        first: f64,
        last: f64,
    },

    #[error("window length {0} must be positive")]
    EmptyWindow(f64),

    #[error("overlap of {overlap} time units is too short for shift {tau}")]
    OverlapTooShort { tau: f64, overlap: f64 },

    #[error("conservation law violated: c_E + c_ES + c_EI - T = {defect:e}")]
    ConservationViolated { defect: f64 },

    #[error("box has no feasible point after {tried} samples")]
    EmptyBox { tried: usize },

    #[error("step size underflow at t = {t} (h = {step:e}), state {state:?}")]
    StepUnderflow { t: f64, step: f64, state: Vec<f64> },

    #[error("shift L = {0} must be positive")]
    NonPositiveShift(f64),

    #[error(
        "iteration lost monotonicity at step {step}: order defect {defect:e} exceeds {limit:e}"
    )]
    OrderDefect {
        step: usize,
        defect: f64,
        limit: f64,
    },

    #[error("trajectory too short: {0}")]
    TrajectoryTooShort(String),

    #[error("config error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config validation failed at `{path}`: {message}")]
    ConfigValidation { path: String, message: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidSignal(_)
                | Error::InvalidParameter { .. }
                | Error::DimensionMismatch { .. }
                | Error::ConfigParse { .. }
                | Error::ConfigValidation { .. }
                | Error::EmptyWindow(_)
                | Error::NonPositiveShift(_)
                | Error::TrajectoryTooShort(_)
        )
    }

    pub(crate) fn param(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
