use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown model '{0}' (expected one of bm, bm_drift, ou, gbm)")]
    UnknownModel(String),
    #[error("model '{model}' requires parameter '{param}'")]
    MissingParameter { model: String, param: String },
    #[error("invalid parameter '{param}': {reason}")]
    InvalidParameter { param: String, reason: String },
    #[error("non-finite state at step {step} (value {value})")]
    NonFinite { step: usize, value: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid misalignment: {0}")]
    GridMisalignment(String),
    #[error("window exceeds available data: {0}")]
    WindowOutOfRange(String),
    #[error("value {value} outside valid interval [{lo}, {hi}]")]
    OutsideInterval { value: f64, lo: f64, hi: f64 },
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("non-monotone input at index {0}")]
    NonMonotone(usize),
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("config: {0}")]
    Config(String),
    #[error("config file not found: {0}")]
    ConfigNotFound(String),
    #[error("too many excluded paths: {excluded} of {total} (limit {limit:.0}%); use a smaller epsilon")]
    TooManyExcluded {
        excluded: usize,
        total: usize,
        limit: f64,
    },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-greppable code for the error class.
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnknownModel(_) => "UNKNOWN_MODEL",
            Error::MissingParameter { .. } => "MISSING_PARAMETER",
            Error::InvalidParameter { .. } => "INVALID_PARAMETER",
            Error::NonFinite { .. } => "NON_FINITE",
            Error::InvalidArgument(_) => "INVALID_ARGUMENT",
            Error::GridMisalignment(_) => "GRID_MISALIGNMENT",
            Error::WindowOutOfRange(_) => "WINDOW_OUT_OF_RANGE",
            Error::OutsideInterval { .. } => "OUTSIDE_INTERVAL",
            Error::Quadrature(_) => "QUADRATURE_FAILED",
            Error::NonMonotone(_) => "NON_MONOTONE",
            Error::TooFewSamples(_) => "TOO_FEW_SAMPLES",
            Error::Config(_) => "CONFIG_INVALID",
            Error::ConfigNotFound(_) => "CONFIG_NOT_FOUND",
            Error::TooManyExcluded { .. } => "TOO_MANY_EXCLUDED",
            Error::Io(_) => "IO_ERROR",
            Error::Json(_) => "JSON_ERROR",
        }
    }

    /// Whether the error stems from user configuration (CLI exit status 2).
    pub fn is_config_error(&self) -> bool {
        !matches!(self, Error::NonFinite { .. } | Error::Io(_) | Error::Json(_) | Error::Quadrature(_))
    }
}
