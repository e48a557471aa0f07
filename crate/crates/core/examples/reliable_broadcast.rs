//! The source of two ATREE-R broadcasts crashes partway through the second.
//! Survivors relay what they hold, so they all end up with the same set.

use vcube::metrics::deliveries;
use vcube::{
    run, AppBroadcast, CrashSchedule, ProcessId, ProtocolName, RunOptions, SimTime, SystemConfig,
};

fn main() -> vcube::Result<()> {
    let config = SystemConfig::new(8);
    let source = ProcessId(0);
    let workload = [
        AppBroadcast::new(SimTime::ZERO, source),
        AppBroadcast::new(SimTime::ZERO, source),
    ];
    let at = SimTime::from_units(6.45)?;

    for protocol in [ProtocolName::AtreeB, ProtocolName::AtreeR] {
        let mut crashes = CrashSchedule::new();
        crashes.add(source, at)?;
        let trace = run(
            &config,
            &crashes,
            &workload,
            protocol,
            RunOptions::default(),
        )?;
        println!("{protocol}, source crashes at {at}:");
        for (i, d) in deliveries(&trace).iter().enumerate().skip(1) {
            let ids: Vec<String> = d.iter().map(|m| m.to_string()).collect();
            println!("  p{i} delivered [{}]", ids.join(", "));
        }
        let c = trace.counts;
        println!(
            "  TREE {} ACK {} NACK {}, quiet at {}",
            c.tree, c.ack, c.nack, trace.end_time
        );
    }
    Ok(())
}
