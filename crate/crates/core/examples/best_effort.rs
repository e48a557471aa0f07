//! One ATREE-B broadcast on eight processes, printed as a full trace.

use vcube::metrics::latency_of;
use vcube::{
    run, AppBroadcast, CrashSchedule, ProcessId, ProtocolName, RunOptions, SimTime, SystemConfig,
};

fn main() -> vcube::Result<()> {
    let config = SystemConfig::new(8);
    let workload = [AppBroadcast::new(SimTime::ZERO, ProcessId(0))];
    let trace = run(
        &config,
        &CrashSchedule::new(),
        &workload,
        ProtocolName::AtreeB,
        RunOptions::default(),
    )?;

    print!("{}", trace.to_text());
    let id = vcube::MessageId::new(ProcessId(0), 1);
    println!("latency {}", latency_of(&trace, id)?);
    let c = trace.counts;
    println!("TREE {} ACK {} NACK {}", c.tree, c.ack, c.nack);
    Ok(())
}
