use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The post-selected state is (numerically) orthogonal to the input, so
    /// the weak value has a pole.
    #[error("post-selection is singular: overlap {overlap:e} is below threshold")]
    PostSelectionSingular { overlap: f64 },

    #[error("state is not normalized: norm² = {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error("operator is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid pointer: {0}")]
    InvalidPointer(String),

    #[error("ensemble of {size} is too small for method {method}")]
    InsufficientEnsemble { method: char, size: u64 },

    #[error("method C needs two pointer degrees of freedom; single-pointer coupling cannot read both parts at once")]
    NeedsTwoPointers,

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("sensor overflow: {fraction:e} of the intensity falls outside the sensor")]
    SensorOverflow { fraction: f64 },

    #[error("Gaussian fit failed on the {axis} marginal (R² = {r_squared:.5})")]
    FitFailed { axis: char, r_squared: f64 },

    #[error("image has zero total intensity")]
    EmptyImage,

    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed {format} data at line {line}: {message}")]
    Parse {
        format: &'static str,
        line: usize,
        message: String,
    },
}
