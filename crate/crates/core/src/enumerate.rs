//! Exhaustive crash-timing enumeration.
//!
//! Under the deterministic kernel the only thing a crash time changes is
//! which services and send completions happen before it and which detector
//! round sees it. Crashing exactly at each of those instants (plus time 0 and
//! just after quiescence) therefore covers every distinct behaviour of a
//! single crash against the fault-free run. Several crashes take the product.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::failure::{CrashSchedule, TestPhase};
use crate::protocol::ProtocolName;
use crate::sim::{run, AppBroadcast, RunOptions, SystemConfig, Trace, TraceAction};
use crate::time::SimTime;
use crate::topology::ProcessId;

pub const DEFAULT_CAP: u64 = 100_000;

/// Crash instants worth trying against `fault_free`, in ascending order.
pub fn candidate_times(config: &SystemConfig, fault_free: &Trace) -> Vec<SimTime> {
    let mut times = BTreeSet::new();
    times.insert(SimTime::ZERO);
    for r in &fault_free.records {
        times.insert(r.time);
        if r.action == TraceAction::Send {
            if let Some(arrival) = r.arrival {
                times.insert(r.time + config.timing.send);
                times.insert(arrival);
            }
        }
    }
    let end = fault_free.end_time;
    let interval = config.detector.test_interval;
    let phases: BTreeSet<u64> = match config.detector.phase {
        TestPhase::Aligned => [0].into(),
        TestPhase::PerObserver { .. } => (0..config.n as u32)
            .map(|o| {
                // a crash at time 0 is detected at phase + timeout
                let d = config
                    .detector
                    .detection_time(ProcessId(o), ProcessId(o ^ 1), SimTime::ZERO)
                    .expect("distinct processes");
                (d - config.detector.timeout).ticks()
            })
            .collect(),
    };
    for phase in phases {
        let mut t = SimTime::from_ticks(phase);
        while t <= end {
            times.insert(t);
            t = t + interval;
        }
    }
    times.insert(end + SimTime::from_ticks(1));
    times.into_iter().collect()
}

/// Number of schedules for `k` crashes over `times` candidates, saturating.
pub fn run_count(times: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, _| acc.saturating_mul(times as u64))
}

fn check_crash_set(config: &SystemConfig, crash_set: &[ProcessId]) -> Result<()> {
    let distinct: BTreeSet<_> = crash_set.iter().collect();
    if distinct.len() != crash_set.len() {
        return Err(Error::Schedule("crash set has duplicates".into()));
    }
    if crash_set.len() >= config.n {
        return Err(Error::Schedule(format!(
            "{} crashes leave no correct process among {}",
            crash_set.len(),
            config.n
        )));
    }
    if let Some(p) = crash_set.iter().find(|p| p.index() >= config.n) {
        return Err(Error::ProcessOutOfRange {
            process: *p,
            n: config.n,
        });
    }
    Ok(())
}

/// Runs every crash-timing assignment of `crash_set` and maps each run
/// through `f`. Results come back in enumeration order.
pub fn map_crash_timings<R, F>(
    config: &SystemConfig,
    workload: &[AppBroadcast],
    protocol: ProtocolName,
    crash_set: &[ProcessId],
    cap: u64,
    f: F,
) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(&CrashSchedule, Trace) -> R + Sync,
{
    config.validate()?;
    check_crash_set(config, crash_set)?;
    let base = run(
        config,
        &CrashSchedule::new(),
        workload,
        protocol,
        RunOptions::default(),
    )?;
    let times = candidate_times(config, &base);
    let count = run_count(times.len(), crash_set.len());
    if count > cap {
        return Err(Error::EnumerationCap { count, cap });
    }
    (0..count)
        .into_par_iter()
        .map(|mut index| {
            let mut schedule = CrashSchedule::new();
            for &p in crash_set {
                let t = times[(index % times.len() as u64) as usize];
                index /= times.len() as u64;
                schedule.add(p, t)?;
            }
            let trace = run(config, &schedule, workload, protocol, RunOptions::default())?;
            Ok(f(&schedule, trace))
        })
        .collect()
}

/// All traces for `crash_set`. Memory grows with the run count; prefer
/// [`map_crash_timings`] for large sweeps.
pub fn enumerate_crash_timings(
    config: &SystemConfig,
    workload: &[AppBroadcast],
    protocol: ProtocolName,
    crash_set: &[ProcessId],
    cap: u64,
) -> Result<Vec<Trace>> {
    map_crash_timings(config, workload, protocol, crash_set, cap, |_, trace| trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::latency_of;
    use crate::protocol::MessageId;

    fn workload() -> Vec<AppBroadcast> {
        vec![AppBroadcast::new(SimTime::ZERO, ProcessId(0))]
    }

    #[test]
    fn two_process_source_crash() {
        let config = SystemConfig::new(2);
        let traces = enumerate_crash_timings(
            &config,
            &workload(),
            ProtocolName::AtreeB,
            &[ProcessId(0)],
            DEFAULT_CAP,
        )
        .unwrap();
        assert!(traces.len() >= 3);
        let outcomes: BTreeSet<(u64, bool)> = traces
            .iter()
            .map(|t| {
                (
                    t.counts.total(),
                    t.records_of(TraceAction::Complete).next().is_some(),
                )
            })
            .collect();
        // crash before the send, between send and ACK, after completion
        assert_eq!(outcomes, [(0, false), (2, false), (2, true)].into());
    }

    #[test]
    fn single_inner_crash_still_delivers() {
        let config = SystemConfig::new(8);
        let id = MessageId::new(ProcessId(0), 1);
        let ok = map_crash_timings(
            &config,
            &workload(),
            ProtocolName::AtreeB,
            &[ProcessId(4)],
            DEFAULT_CAP,
            |_, trace| latency_of(&trace, id).is_ok() && !trace.truncated,
        )
        .unwrap();
        assert!(ok.len() > 10);
        assert!(ok.into_iter().all(|b| b));
    }

    #[test]
    fn cap_is_enforced() {
        let config = SystemConfig::new(8);
        let err = map_crash_timings(
            &config,
            &workload(),
            ProtocolName::AtreeB,
            &[ProcessId(1), ProcessId(2), ProcessId(3)],
            1000,
            |_, _| (),
        )
        .unwrap_err();
        assert!(matches!(err, Error::EnumerationCap { cap: 1000, .. }));
    }

    #[test]
    fn rejects_bad_crash_sets() {
        let config = SystemConfig::new(2);
        let all = [ProcessId(0), ProcessId(1)];
        assert!(enumerate_crash_timings(
            &config,
            &workload(),
            ProtocolName::AtreeB,
            &all,
            DEFAULT_CAP
        )
        .is_err());
        let dup = [ProcessId(1), ProcessId(1)];
        assert!(enumerate_crash_timings(
            &config,
            &workload(),
            ProtocolName::AtreeB,
            &dup,
            DEFAULT_CAP
        )
        .is_err());
    }
}
