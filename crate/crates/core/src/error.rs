use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("time {t} outside the horizon [0, {horizon}]")]
    OutOfDomain { t: f64, horizon: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("point {point:?} is not in the control set")]
    NotInSet { point: Vec<f64> },

    #[error("invalid control path: {0}")]
    InvalidPath(String),

    #[error("control path has a jump at t = {t}; an absolutely continuous input is required")]
    JumpPresent { t: f64 },

    #[error("bridge endpoints do not match the jump at t = {t}")]
    BridgeMismatch { t: f64 },

    #[error("bridge variation {variation} exceeds the Whitney bound {bound}")]
    WhitneyViolation { variation: f64, bound: f64 },

    #[error("invalid space-time control: {0}")]
    InvalidSpaceTime(String),

    #[error("invalid clock: {0}")]
    InvalidClock(String),

    #[error("degenerate space-time control: total speed integral is zero")]
    Degenerate,

    #[error("state diverged at {at} (|x| = {norm:e})")]
    Divergence { at: f64, norm: f64 },

    #[error("grids do not match")]
    GridMismatch,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("serialization: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
