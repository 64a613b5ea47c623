use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("flow set is empty")]
    EmptyFlowSet,

    /// Two flows share a deadline; every solver assumes a strict ordering.
    #[error("flows {first} and {second} share deadline {deadline}")]
    EqualDeadlines {
        first: usize,
        second: usize,
        deadline: f64,
    },

    #[error("invalid flow profile: {0}")]
    InvalidProfile(String),

    #[error("invalid reshaping plan: {0}")]
    InvalidPlan(String),

    #[error("bandwidth {bandwidth} is below the required minimum {required}")]
    InsufficientBandwidth { bandwidth: f64, required: f64 },

    /// A reshaping delay consumes the whole deadline of `flow`.
    #[error("reshaping delay of flow {flow} exhausts its deadline")]
    InfeasibleReshaping { flow: usize },

    #[error("{count} flows exceed the supported limit of {limit}")]
    TooManyFlows { count: usize, limit: usize },

    #[error("time step {dt} is coarser than the allowed maximum {max}")]
    GridTooCoarse { dt: f64, max: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Stable machine-readable tag, used by the CLI's error payloads.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyFlowSet => "EmptyFlowSet",
            Error::EqualDeadlines { .. } => "EqualDeadlines",
            Error::InvalidProfile(_) => "InvalidProfile",
            Error::InvalidPlan(_) => "InvalidPlan",
            Error::InsufficientBandwidth { .. } => "InsufficientBandwidth",
            Error::InfeasibleReshaping { .. } => "InfeasibleReshaping",
            Error::TooManyFlows { .. } => "TooManyFlows",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
            Error::InvalidConfig(_) => "InvalidConfig",
        }
    }
}
