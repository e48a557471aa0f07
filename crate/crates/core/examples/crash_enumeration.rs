//! Crashes two inner processes at every relevant instant and checks that
//! each correct process still delivers the broadcast exactly once.

use vcube::enumerate::{map_crash_timings, DEFAULT_CAP};
use vcube::metrics::deliveries;
use vcube::{AppBroadcast, ProcessId, ProtocolName, SimTime, SystemConfig};

fn main() -> vcube::Result<()> {
    let config = SystemConfig::new(8);
    let workload = [AppBroadcast::new(SimTime::ZERO, ProcessId(0))];
    let crash_set = [ProcessId(2), ProcessId(4)];

    let results = map_crash_timings(
        &config,
        &workload,
        ProtocolName::AtreeB,
        &crash_set,
        DEFAULT_CAP,
        |sched, trace| {
            deliveries(&trace)
                .iter()
                .enumerate()
                .filter(|(i, _)| sched.is_correct(ProcessId(*i as u32)))
                .all(|(_, d)| d.len() == 1)
        },
    )?;
    let bad = results.iter().filter(|ok| !**ok).count();
    println!("{} schedules tried, {} violations", results.len(), bad);
    Ok(())
}
