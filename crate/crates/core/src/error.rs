use thiserror::Error;

use crate::protocol::MessageId;
use crate::topology::ProcessId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("n = {0} is not a power of two (n >= 2 required)")]
    NotPowerOfTwo(usize),

    #[error("process {process} out of range for n = {n}")]
    ProcessOutOfRange { process: ProcessId, n: usize },

    #[error("cluster index {s} out of range 1..={dim}")]
    ClusterOutOfRange { s: u32, dim: u32 },

    #[error("cluster index of process {0} with itself is undefined")]
    SameProcess(ProcessId),

    #[error("invalid crash schedule: {0}")]
    Schedule(String),

    #[error("invalid detector policy: {0}")]
    Detector(String),

    #[error("invalid time value {0}")]
    Time(f64),

    #[error("unknown protocol {0:?}")]
    UnknownProtocol(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("crash-timing enumeration needs {count} runs, above the cap of {cap}")]
    EnumerationCap { count: u64, cap: u64 },

    #[error("message {id} was never broadcast in this trace")]
    UnknownMessage { id: MessageId },

    #[error("message {id} not delivered by correct processes {missing:?}")]
    Undelivered {
        id: MessageId,
        missing: Vec<ProcessId>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
