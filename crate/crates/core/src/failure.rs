//! Crash-stop failures and the perfect failure detector.
//!
//! Crashes are permanent. Every surviving observer learns about every crash
//! exactly once, at a time given by [`DetectorPolicy::detection_time`]; the
//! detector's own test traffic is not simulated.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::sim::TimingParams;
use crate::time::SimTime;
use crate::topology::ProcessId;

/// When each faulty process crashes. At most one entry per process.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CrashSchedule {
    entries: BTreeMap<ProcessId, SimTime>,
}

impl CrashSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ProcessId, SimTime)>,
    {
        let mut schedule = CrashSchedule::new();
        for (p, t) in entries {
            schedule.add(p, t)?;
        }
        Ok(schedule)
    }

    pub fn add(&mut self, p: ProcessId, at: SimTime) -> Result<()> {
        if self.entries.insert(p, at).is_some() {
            return Err(Error::Schedule(format!("process {p} crashes twice")));
        }
        Ok(())
    }

    /// Checks ids against `n` and that at least one process survives.
    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some((p, _)) = self.entries.iter().find(|(p, _)| p.index() >= n) {
            return Err(Error::Schedule(format!(
                "process {p} out of range for n = {n}"
            )));
        }
        if self.entries.len() >= n {
            return Err(Error::Schedule(format!(
                "{} crashes leave no correct process among {n}",
                self.entries.len()
            )));
        }
        Ok(())
    }

    pub fn crash_time(&self, p: ProcessId) -> Option<SimTime> {
        self.entries.get(&p).copied()
    }

    /// `true` iff `p` has not crashed by time `t`. A crash at `t` takes effect at `t`.
    pub fn is_correct_at(&self, p: ProcessId, t: SimTime) -> bool {
        self.entries.get(&p).is_none_or(|&c| c > t)
    }

    /// Never crashes during the run.
    pub fn is_correct(&self, p: ProcessId) -> bool {
        !self.entries.contains_key(&p)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ProcessId, SimTime)> + '_ {
        self.entries.iter().map(|(&p, &t)| (p, t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Phase of the detector's test rounds for each observer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TestPhase {
    /// All observers test on the same global rounds `k * test_interval`.
    #[default]
    Aligned,
    /// Each observer gets a fixed pseudo-random offset in `[0, test_interval)`.
    PerObserver { seed: u64 },
}

/// Latency model of the perfect failure detector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DetectorPolicy {
    pub test_interval: SimTime,
    pub timeout: SimTime,
    pub phase: TestPhase,
}

impl DetectorPolicy {
    /// Test every 5.0 units, time out after `4 * (t_s + t_r + t_t)`.
    pub fn for_timing(timing: &TimingParams) -> Self {
        DetectorPolicy {
            test_interval: SimTime::from_units(5.0).expect("constant"),
            timeout: (timing.send + timing.receive + timing.transmit) * 4,
            phase: TestPhase::Aligned,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.test_interval == SimTime::ZERO {
            return Err(Error::Detector("test interval must be positive".into()));
        }
        if self.timeout == SimTime::ZERO {
            return Err(Error::Detector("timeout must be positive".into()));
        }
        Ok(())
    }

    fn offset(&self, observer: ProcessId) -> u64 {
        match self.phase {
            TestPhase::Aligned => 0,
            TestPhase::PerObserver { seed } => {
                splitmix64(seed ^ u64::from(observer.0)) % self.test_interval.ticks()
            }
        }
    }

    /// When `observer` is notified that `crashed` (which crashed at
    /// `crash_time`) is gone: the first test round at or after the crash,
    /// plus the timeout.
    pub fn detection_time(
        &self,
        observer: ProcessId,
        crashed: ProcessId,
        crash_time: SimTime,
    ) -> Result<SimTime> {
        if observer == crashed {
            return Err(Error::SameProcess(observer));
        }
        let interval = self.test_interval.ticks();
        let phase = self.offset(observer);
        let c = crash_time.ticks();
        let round = if c <= phase {
            phase
        } else {
            phase + (c - phase).div_ceil(interval) * interval
        };
        Ok(SimTime::from_ticks(round) + self.timeout)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(u: f64) -> SimTime {
        SimTime::from_units(u).unwrap()
    }

    fn default_policy() -> DetectorPolicy {
        DetectorPolicy::for_timing(&TimingParams::default())
    }

    #[test]
    fn detection_time_examples() {
        let p = default_policy();
        assert_eq!(p.timeout, t(4.0));
        let d = |c| p.detection_time(ProcessId(1), ProcessId(2), t(c)).unwrap();
        assert_eq!(d(0.0), t(4.0));
        assert_eq!(d(5.0), t(9.0));
        assert_eq!(d(0.1), t(9.0));
        assert!(p
            .detection_time(ProcessId(3), ProcessId(3), t(0.0))
            .is_err());
    }

    #[test]
    fn per_observer_phase_still_after_crash() {
        let p = DetectorPolicy {
            phase: TestPhase::PerObserver { seed: 7 },
            ..default_policy()
        };
        for obs in 0..16 {
            for c in [0.0, 0.3, 4.99, 5.0, 12.7] {
                let d = p
                    .detection_time(ProcessId(obs), ProcessId(99), t(c))
                    .unwrap();
                assert!(d > t(c));
                assert!(d <= t(c) + p.test_interval + p.timeout);
            }
        }
    }

    #[test]
    fn is_correct_at_boundary() {
        let s = CrashSchedule::from_entries([(ProcessId(3), t(3.0))]).unwrap();
        assert!(CrashSchedule::new().is_correct_at(ProcessId(3), t(100.0)));
        assert!(s.is_correct_at(ProcessId(3), t(2.9)));
        assert!(!s.is_correct_at(ProcessId(3), t(3.0)));
        assert!(s.is_correct_at(ProcessId(1), t(3.0)));
    }

    #[test]
    fn schedule_validation() {
        let mut s = CrashSchedule::new();
        s.add(ProcessId(0), t(1.0)).unwrap();
        assert!(s.add(ProcessId(0), t(2.0)).is_err());
        assert!(s.validate(2).is_ok());
        s.add(ProcessId(1), t(1.0)).unwrap();
        assert!(s.validate(2).is_err());
        let s = CrashSchedule::from_entries([(ProcessId(9), t(0.0))]).unwrap();
        assert!(s.validate(8).is_err());
    }

    #[test]
    fn policy_validation() {
        let mut p = default_policy();
        assert!(p.validate().is_ok());
        p.timeout = SimTime::ZERO;
        assert!(p.validate().is_err());
    }
}
