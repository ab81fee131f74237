use thiserror::Error;

/// Errors produced by the estimators, tests and simulation driver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid window m={m}: must satisfy 1 <= m <= {max}")]
    InvalidWindow { m: usize, max: usize },

    /// A window spacing `x(i+m) - x(i-m)` was not strictly positive.
    #[error("degenerate spacing at order statistic {index}: tied values span a full window")]
    DegenerateSpacing { index: usize },

    #[error("degenerate breakpoints: interval {index} has non-positive width")]
    DegenerateBreakpoints { index: usize },

    #[error("degenerate variance estimate {value}")]
    DegenerateVariance { value: f64 },

    #[error("scale estimate {value} is not positive")]
    InvalidScale { value: f64 },

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("insufficient cycles: need r >= 2, got r = {0}")]
    InsufficientCycles(usize),

    #[error("insufficient set size: need k >= 2, got k = {0}")]
    InsufficientSetSize(usize),

    #[error("true entropy unavailable for {0}")]
    UnsupportedDistribution(String),

    #[error("critical value key mismatch: {0}")]
    KeyMismatch(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config key `{key}`{}: {msg}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config {
        key: String,
        line: Option<usize>,
        msg: String,
    },

    #[error("report validation failed: {0}")]
    Validation(String),

    #[error("{0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by degenerate data rather than bad input.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateSpacing { .. }
                | Error::DegenerateBreakpoints { .. }
                | Error::DegenerateVariance { .. }
                | Error::InvalidScale { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
