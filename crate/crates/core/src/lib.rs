//! Autonomic spanning-tree broadcast over the VCube virtual hypercube.
//!
//! The protocol state machines ([`tree`], [`broadcast`], [`baseline`]) are
//! pure: they consume inputs and return actions. [`sim`] drives them under a
//! sequential send/receive cost model with crash faults and a perfect failure
//! detector.

pub mod baseline;
pub mod broadcast;
pub mod enumerate;
pub mod error;
pub mod failure;
pub mod metrics;
pub mod protocol;
pub mod scenario;
pub mod sim;
pub mod suite;
pub mod time;
pub mod topology;
pub mod tree;
pub mod verify;

pub use error::{Error, Result};
pub use failure::{CrashSchedule, DetectorPolicy, TestPhase};
pub use protocol::{MessageId, MessageKind, Payload, ProtocolName};
pub use sim::{
    run, AppBroadcast, RunOptions, SystemConfig, TimingParams, Trace, TraceAction, TraceLevel,
};
pub use time::SimTime;
pub use topology::{ProcessId, Topology, View};
