use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma function pole at z = {0}")]
    Pole(f64),

    #[error("fractional order {0} outside the supported range (0, 2]")]
    OrderOutOfRange(f64),

    #[error("power {power} minus order {alpha} is not positive; the order sensitivity has no finite limit at x = 0")]
    SensitivityDomain { power: u32, alpha: f64 },

    #[error("invalid modulating family: {0}")]
    InvalidFamily(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("rank-deficient system: smallest singular value {sigma_min:e} <= 1e-12 x largest {sigma_max:e}")]
    RankDeficient { sigma_min: f64, sigma_max: f64 },

    #[error("degenerate order gradient: <K', K'> = {0:e}")]
    GradientDegenerate(f64),

    #[error("malformed measurement data: {0}")]
    Data(String),
}
