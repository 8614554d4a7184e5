use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("u_grid not increasing")]
    GridNotIncreasing,
    #[error("grid value {0} outside [0, 1]")]
    GridOutOfRange(f64),
    #[error("grid must not be empty")]
    EmptyGrid,
    #[error("jump law has zero variance; normalized fluctuations are undefined")]
    DegenerateLaw,
    #[error("closed-form scaling is not defined for the pure-power family")]
    NoClosedFormScaling,
    #[error("closed-form scaling needs t > t_min (t = {t}, t_min = {t_min})")]
    ScalingBelowCutoff { t: f64, t_min: f64 },
    #[error("lemma ratio requires b < a (got a = {a}, b = {b})")]
    LemmaOrder { a: f64, b: f64 },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("too few samples: {got} (need at least {need})")]
    TooFewSamples { got: usize, need: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
