use thiserror::Error;

/// Errors raised by the simulation engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("configuration is not admissible: {0}")]
    Admissibility(String),

    /// A sweep or loop trace produced an impossible structure. Callers that
    /// hit this on random input should resample.
    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("singular input: {0}")]
    Singular(String),

    #[error("unsupported regime: {0}")]
    Regime(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("retry budget of {0} attempts exhausted")]
    RetryBudget(usize),

    #[error("clan size cap of {cap} exceeded")]
    ClanCap { cap: usize },

    #[error("insufficient samples: need {needed}, got {got}")]
    Budget { needed: usize, got: usize },

    #[error("io: {0}")]
    Io(String),

    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
