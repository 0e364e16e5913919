use thiserror::Error;

/// Errors raised by samplers, operators, chains and the verification harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The unrepresented tail of a truncated partition is too heavy for a
    /// size-biased pick among retained atoms.
    #[error("tail mass {tail} exceeds admissible bound {bound}")]
    TailTooHeavy { tail: f64, bound: f64 },

    #[error("epsilon {epsilon} is below the truncation resolution {resolution}")]
    InsufficientResolution { epsilon: f64, resolution: f64 },

    #[error("resource limit exceeded: {what} ({requested} > cap {cap})")]
    ResourceLimit {
        what: &'static str,
        requested: f64,
        cap: f64,
    },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("scenario `{scenario}` is missing parameter `{param}`")]
    MissingParam { scenario: String, param: String },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
