use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grain #{index}: {reason}")]
    InvalidGrain { index: usize, reason: String },

    #[error("grain #{index} has diameter {diameter} which is not below half the torus side {half_side}")]
    GrainTooLargeForTorus {
        index: usize,
        diameter: f64,
        half_side: f64,
    },

    #[error("grain #{index} has circumradius {circumradius} exceeding the sampling margin {margin}")]
    MarginTooSmall {
        index: usize,
        circumradius: f64,
        margin: f64,
    },

    #[error("degenerate segment in polygon #{index}")]
    DegenerateSegment { index: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("argument {value} outside the supported range: {reason}")]
    OutOfRange { value: f64, reason: String },

    #[error("quadrature did not converge: estimated error {error:e} above tolerance {tolerance:e}")]
    QuadratureDiverged { error: f64, tolerance: f64 },

    #[error("insufficient samples: {got} given, at least {need} required")]
    InsufficientSamples { got: usize, need: usize },

    #[error("component {component} has zero variance and cannot be standardized")]
    DegenerateComponent { component: usize },

    #[error("invalid histogram: {0}")]
    InvalidHistogram(String),

    #[error("config error: {0}")]
    Config(String),
}
