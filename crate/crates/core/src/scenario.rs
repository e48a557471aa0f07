//! Seeded scenario descriptions and their expansion into runnable inputs.
//!
//! A scenario file is TOML:
//!
//! ```toml
//! n = 512
//! protocol = "atree-b"
//! seed = 42
//!
//! [workload]
//! sources = [0]
//! messages = 10        # per source, all requested at `start`
//! start = 0.0          # optional
//!
//! [crashes]
//! count = 3
//! # optional:
//! # include_sources = false
//! # distribution = "uniform"    # or "normal"
//! # explicit = [[4, 1.5], [9, 2.0]]
//!
//! # optional overrides
//! [timing]
//! send = 0.1
//! receive = 0.1
//! transmit = 0.8
//!
//! [detector]
//! test_interval = 5.0
//! timeout = 4.0
//! # phase_seed = 7
//! ```
//!
//! Random crash targets are distinct and drawn without replacement. Under
//! best-effort protocols the sources are left out unless `include_sources`
//! is set. Crash times fall inside the window from `start` until the same
//! workload quiesces without faults.

use std::path::Path;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::failure::{CrashSchedule, DetectorPolicy, TestPhase};
use crate::protocol::ProtocolName;
use crate::sim::{run, AppBroadcast, RunOptions, SystemConfig, TimingParams, Trace};
use crate::time::SimTime;
use crate::topology::ProcessId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub n: usize,
    pub protocol: ProtocolName,
    pub seed: u64,
    pub workload: WorkloadSpec,
    pub crashes: CrashSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub sources: Vec<u32>,
    pub messages: u32,
    #[serde(default)]
    pub start: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrashTimeDistribution {
    #[default]
    Uniform,
    /// Centered on the window, sigma a sixth of its width, clamped to it.
    Normal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrashSpec {
    pub count: usize,
    #[serde(default)]
    pub include_sources: bool,
    #[serde(default)]
    pub distribution: CrashTimeDistribution,
    /// Fixed `(process, time)` pairs replacing the random draw.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub explicit: Vec<(u32, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSpec {
    pub send: f64,
    pub receive: f64,
    pub transmit: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    pub test_interval: f64,
    pub timeout: f64,
    #[serde(default)]
    pub phase_seed: Option<u64>,
}

impl Scenario {
    /// One broadcast per message from each source, no crashes.
    pub fn new(n: usize, protocol: ProtocolName, sources: Vec<u32>, messages: u32) -> Self {
        Scenario {
            n,
            protocol,
            seed: 0,
            workload: WorkloadSpec {
                sources,
                messages,
                start: 0.0,
            },
            crashes: CrashSpec {
                count: 0,
                include_sources: false,
                distribution: CrashTimeDistribution::Uniform,
                explicit: Vec::new(),
            },
            timing: None,
            detector: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Scenario::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let config = self.config()?;
        config.validate()?;
        if self.workload.sources.is_empty() {
            return Err(Error::Config("workload needs at least one source".into()));
        }
        if let Some(&s) = self
            .workload
            .sources
            .iter()
            .find(|&&s| s as usize >= self.n)
        {
            return Err(Error::ProcessOutOfRange {
                process: ProcessId(s),
                n: self.n,
            });
        }
        SimTime::from_units(self.workload.start)?;
        if self.crashes.count >= self.n {
            return Err(Error::Config(format!(
                "crash count {} must be below n = {}",
                self.crashes.count, self.n
            )));
        }
        if !self.crashes.explicit.is_empty() && self.crashes.explicit.len() != self.crashes.count {
            return Err(Error::Config(format!(
                "crash count {} disagrees with {} explicit crashes",
                self.crashes.count,
                self.crashes.explicit.len()
            )));
        }
        if self.crashes.explicit.is_empty() && self.crashes.count > self.candidates().len() {
            return Err(Error::Config(format!(
                "cannot pick {} crash targets outside the sources",
                self.crashes.count
            )));
        }
        Ok(())
    }

    pub fn config(&self) -> Result<SystemConfig> {
        let timing = match self.timing {
            Some(t) => TimingParams::from_units(t.send, t.receive, t.transmit)?,
            None => TimingParams::default(),
        };
        let detector = match self.detector {
            Some(d) => DetectorPolicy {
                test_interval: SimTime::from_units(d.test_interval)?,
                timeout: SimTime::from_units(d.timeout)?,
                phase: d
                    .phase_seed
                    .map_or(TestPhase::Aligned, |seed| TestPhase::PerObserver { seed }),
            },
            None => DetectorPolicy::for_timing(&timing),
        };
        Ok(SystemConfig {
            n: self.n,
            timing,
            detector,
        })
    }

    pub fn workload(&self) -> Result<Vec<AppBroadcast>> {
        let at = SimTime::from_units(self.workload.start)?;
        let mut out = Vec::new();
        for k in 0..self.workload.messages {
            for &s in &self.workload.sources {
                out.push(AppBroadcast {
                    at,
                    source: ProcessId(s),
                    payload: Arc::from(format!("{s}/{k}").into_bytes()),
                });
            }
        }
        Ok(out)
    }

    fn candidates(&self) -> Vec<u32> {
        let skip_sources = !self.protocol.is_reliable() && !self.crashes.include_sources;
        (0..self.n as u32)
            .filter(|p| !(skip_sources && self.workload.sources.contains(p)))
            .collect()
    }

    /// From the first broadcast request until fault-free quiescence.
    pub fn window(&self) -> Result<(SimTime, SimTime)> {
        let start = SimTime::from_units(self.workload.start)?;
        let base = run(
            &self.config()?,
            &CrashSchedule::new(),
            &self.workload()?,
            self.protocol,
            RunOptions::summary(),
        )?;
        Ok((start, base.end_time.max(start)))
    }

    /// Crash schedule drawn inside a precomputed window.
    pub fn schedule_in(&self, window: (SimTime, SimTime)) -> Result<CrashSchedule> {
        if !self.crashes.explicit.is_empty() {
            let mut s = CrashSchedule::new();
            for &(p, t) in &self.crashes.explicit {
                s.add(ProcessId(p), SimTime::from_units(t)?)?;
            }
            s.validate(self.n)?;
            return Ok(s);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let pool = self.candidates();
        let mut targets: Vec<u32> = sample(&mut rng, pool.len(), self.crashes.count)
            .into_iter()
            .map(|i| pool[i])
            .collect();
        targets.sort_unstable();
        let (lo, hi) = (window.0.ticks(), window.1.ticks());
        let mut s = CrashSchedule::new();
        for p in targets {
            let t = match self.crashes.distribution {
                CrashTimeDistribution::Uniform => rng.gen_range(lo..=hi),
                CrashTimeDistribution::Normal => {
                    let mid = (lo + hi) as f64 / 2.0;
                    let sigma = ((hi - lo) as f64 / 6.0).max(f64::MIN_POSITIVE);
                    let normal = Normal::new(mid, sigma).expect("positive sigma");
                    (normal.sample(&mut rng).round() as u64).clamp(lo, hi)
                }
            };
            s.add(ProcessId(p), SimTime::from_ticks(t))?;
        }
        Ok(s)
    }

    pub fn schedule(&self) -> Result<CrashSchedule> {
        if !self.crashes.explicit.is_empty() || self.crashes.count == 0 {
            return self.schedule_in((SimTime::ZERO, SimTime::ZERO));
        }
        self.schedule_in(self.window()?)
    }

    pub fn run(&self, options: RunOptions) -> Result<Trace> {
        self.validate()?;
        run(
            &self.config()?,
            &self.schedule()?,
            &self.workload()?,
            self.protocol,
            options,
        )
    }
}
