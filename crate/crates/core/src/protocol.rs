//! The event interface shared by every per-process state machine.
//!
//! A machine consumes one [`Input`] at a time and pushes the resulting
//! [`Action`]s into a caller-owned buffer. Nothing is performed in place, so
//! the simulator decides when sends leave and when deliveries are recorded.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::topology::ProcessId;

/// Opaque application payload. Identity lives in [`MessageId`], never here.
pub type Payload = Arc<[u8]>;

/// Source process plus the source's local broadcast counter (starting at 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MessageId {
    pub source: ProcessId,
    pub ts: u32,
}

impl MessageId {
    pub fn new(source: ProcessId, ts: u32) -> Self {
        MessageId { source, ts }
    }
}

impl fmt::Display for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.source, self.ts)
    }
}

/// Wire-level message kinds, as counted by the metrics layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MessageKind {
    Tree,
    Ack,
    Nack,
    /// Tree-rebuild request of the flooding baseline; counted with NACKs.
    Rebuild,
}

impl MessageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::Tree => "TREE",
            MessageKind::Ack => "ACK",
            MessageKind::Nack => "NACK",
            MessageKind::Rebuild => "REBUILD",
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What the simulator needs to know about a protocol's message type.
pub trait Envelope: Clone + fmt::Debug {
    fn kind(&self) -> MessageKind;
    fn message_id(&self) -> Option<MessageId>;
}

#[derive(Clone, Debug)]
pub enum Input<M> {
    /// The application asks this process to broadcast a payload.
    Broadcast(Payload),
    Receive {
        from: ProcessId,
        msg: M,
    },
    /// Failure-detector notification that a process crashed.
    Crash(ProcessId),
}

#[derive(Clone, Debug)]
pub enum Action<M> {
    Send {
        to: ProcessId,
        msg: M,
    },
    Deliver {
        id: MessageId,
        payload: Payload,
    },
    /// A local broadcast was assigned its id and started.
    Originate {
        id: MessageId,
    },
    /// A local broadcast collected every acknowledgement it waits for.
    Complete {
        id: MessageId,
    },
    Diagnostic(String),
}

/// A run-to-completion protocol state machine for one process.
pub trait Protocol {
    type Msg: Envelope;

    fn id(&self) -> ProcessId;

    fn handle(&mut self, input: Input<Self::Msg>, out: &mut Vec<Action<Self::Msg>>);

    /// Destinations this process is still waiting to hear back from.
    fn awaiting(&self) -> Vec<ProcessId> {
        Vec::new()
    }
}

/// Protocols selectable by name in scenario files and on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ProtocolName {
    /// Bare TREE propagation with no payload memory.
    Tree,
    AtreeB,
    AtreeR,
    AllB,
    AllR,
    NatreeB,
    NatreeR,
}

impl ProtocolName {
    pub const ALL: [ProtocolName; 7] = [
        ProtocolName::Tree,
        ProtocolName::AtreeB,
        ProtocolName::AtreeR,
        ProtocolName::AllB,
        ProtocolName::AllR,
        ProtocolName::NatreeB,
        ProtocolName::NatreeR,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolName::Tree => "tree",
            ProtocolName::AtreeB => "atree-b",
            ProtocolName::AtreeR => "atree-r",
            ProtocolName::AllB => "all-b",
            ProtocolName::AllR => "all-r",
            ProtocolName::NatreeB => "natree-b",
            ProtocolName::NatreeR => "natree-r",
        }
    }

    /// Reliable variants keep relaying when a source crashes.
    pub fn is_reliable(self) -> bool {
        matches!(
            self,
            ProtocolName::AtreeR | ProtocolName::AllR | ProtocolName::NatreeR
        )
    }
}

impl fmt::Display for ProtocolName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        ProtocolName::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownProtocol(s.to_string()))
    }
}

impl TryFrom<String> for ProtocolName {
    type Error = Error;
    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<ProtocolName> for String {
    fn from(p: ProtocolName) -> String {
        p.as_str().to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protocol_names_round_trip() {
        for p in ProtocolName::ALL {
            assert_eq!(p.as_str().parse::<ProtocolName>().unwrap(), p);
        }
        assert!("gossip".parse::<ProtocolName>().is_err());
        assert!(ProtocolName::NatreeR.is_reliable());
        assert!(!ProtocolName::AtreeB.is_reliable());
    }
}
