use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("clock queried at negative true time {0}")]
    NegativeTime(f64),

    #[error("clock queried at {requested} after a query at {previous}")]
    NonMonotoneQuery { requested: f64, previous: f64 },

    #[error("rank {0} attempted to message itself")]
    SelfMessage(usize),

    #[error("deadlock: ranks {blocked:?} are blocked with no pending events")]
    Deadlock { blocked: Vec<usize> },

    #[error("collective mismatch at call {call}: rank {rank} entered {found:?}, expected {expected:?}")]
    CollectiveMismatch {
        call: u64,
        rank: usize,
        expected: String,
        found: String,
    },

    #[error("unknown collective {0:?}")]
    UnknownCollective(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("empty sample: {0}")]
    EmptySample(String),

    #[error("expected {expected} input data")]
    Shape { expected: &'static str },

    #[error("result sets were produced by different plans: {0}")]
    PlanMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
