use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension {dimension} is outside 1..={max}")]
    Dimension { dimension: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("frequency {frequency:?} is outside the support of the {family} weights")]
    Support { frequency: Vec<i64>, family: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("estimation error: {0}")]
    Estimation(String),
    #[error("profile has no coefficient for frequency {0:?}")]
    Coverage(Vec<i64>),
    #[error("need n >= {needed} samples, got {got}")]
    SampleSize { needed: usize, got: usize },
    #[error("point coordinate {value} is outside [0, 1)")]
    Domain { value: f64 },
    #[error("inconsistent weight pair: {0}")]
    Inconsistent(String),
    #[error("no solution below zeta = {limit}")]
    Overflow { limit: u64 },
    #[error("density is negative: minimum {minimum} at {point:?}")]
    Nonnegativity { point: Vec<f64>, minimum: f64 },
    #[error("invalid weight table: {0}")]
    WeightTable(String),
    #[error("rate fit error: {0}")]
    Fit(String),
}
