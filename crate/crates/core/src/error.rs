use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value; `path` is the JSON-style field path.
    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("degenerate configuration at Ω = {omega}: |det| = {det:e} below {threshold:e}")]
    Degenerate { omega: f64, det: f64, threshold: f64 },

    #[error("mechanically unstable configuration: {0}")]
    Unstable(String),

    #[error("combination undefined: photonic gain G+ is zero")]
    UndefinedCombination,

    #[error("signal-blind channel `{label}` at Ω = {omega}")]
    SignalBlind { label: String, omega: f64 },

    #[error("vacuum-noise covariance is numerically singular at Ω = {omega}")]
    DegenerateNoise { omega: f64 },

    #[error("precondition violated: {0}")]
    Misuse(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("η ratio undefined: {0}")]
    UndefinedRatio(String),

    #[error("insufficient data: {segments} Welch segments, need at least {required}")]
    InsufficientData { segments: usize, required: usize },

    #[error("unknown recipe `{0}`")]
    UnknownRecipe(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }

    /// Process exit code: 1 validation, 2 numerical or instability.
    /// Recipe failures are not errors and map to 3 at the call site.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Degenerate { .. }
            | Error::Unstable(_)
            | Error::SignalBlind { .. }
            | Error::DegenerateNoise { .. }
            | Error::Quadrature(_)
            | Error::UndefinedRatio(_)
            | Error::InsufficientData { .. } => 2,
            _ => 1,
        }
    }
}
