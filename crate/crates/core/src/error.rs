use thiserror::Error;

use crate::profile::AgentId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate agent id {0}")]
    DuplicateAgent(AgentId),
    #[error("agent id {0} is in the range reserved for padding entries")]
    ReservedAgentId(u32),
    #[error("{ids} agent ids supplied for {values} values")]
    IdCountMismatch { ids: usize, values: usize },
    #[error("value {0} exceeds the maximum supported bid")]
    ValueTooLarge(u64),
    #[error("cannot pad a profile of length {current} down to {requested}")]
    PadTooShort { current: usize, requested: usize },
    #[error("operation requires a non-empty profile")]
    EmptyProfile,
    #[error("unknown agent id {0}")]
    UnknownAgent(AgentId),
    #[error("agent {0} is not served")]
    NotServed(AgentId),
    #[error("an environment needs at least one unit")]
    ZeroUnits,
    #[error("sampling bias {0} is outside (0, 0.5)")]
    InvalidBias(f64),
    #[error("brute force is limited to {max} agents, got {n}")]
    TooManyAgents { n: usize, max: usize },
    #[error("invalid search interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("unknown profile kind {0:?}")]
    UnknownKind(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}: {message}")]
    ProfileFile { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
