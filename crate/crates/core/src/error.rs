use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    #[error("invalid receptive-field parameters: {0}")]
    InvalidParams(String),

    #[error("invalid kernel specification: {0}")]
    InvalidKernel(String),

    #[error("invalid derivative specification: {0}")]
    InvalidDerivative(String),

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("temporal duration of {given} samples captures too little kernel mass; at least {required} samples are required")]
    DurationTooShort { given: usize, required: usize },

    #[error("kernel support of {samples} samples exceeds the configured maximum of {limit}")]
    SupportTooLarge { samples: usize, limit: usize },

    #[error("transformed comparison domain of {samples} samples exceeds the configured maximum of {limit}")]
    DomainTooLarge { samples: usize, limit: usize },

    #[error("volume of shape {actual:?} is too small: at least {required:?} samples are required")]
    VolumeTooSmall { actual: [usize; 3], required: [usize; 3] },

    #[error("non-finite sample at index {0:?}")]
    NonFinite([usize; 3]),

    #[error("preimage {0:?} lies outside the input domain")]
    OutOfDomain([f64; 3]),

    #[error("direction {phi} is not an eigendirection of the spatial covariance (misalignment {misalignment:.3e})")]
    NotEigendirection { phi: f64, misalignment: f64 },

    #[error("temporal scaling factor {st} is not an integer power of the distribution parameter c = {c}")]
    NonQuantizedTemporalScaling { st: f64, c: f64 },

    #[error("no samples left to compare: {0}")]
    EmptyComparison(String),

    #[error("malformed volume file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
