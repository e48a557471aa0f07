//! Named experiment sweeps producing TSV tables.
//!
//! `fault-free-sweep` runs one broadcast from process 0 for every system
//! size and reports `p latency throughput`. `fault-sweep` fixes `n`, varies
//! the number of crashes from 0 to `max_crashes` over `seeds` random
//! scenarios each, and reports `f latency desvpad2 TREE ACK NACK desvpad1
//! failed`: mean latency and its standard deviation, mean message counts, the
//! standard deviation of the total count, and how many runs violated
//! delivery. Standard deviations are population deviations.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{broadcasts, latency_of, mean_std};
use crate::protocol::ProtocolName;
use crate::scenario::{DetectorSpec, Scenario, TimingSpec};
use crate::sim::{MessageCounts, RunOptions, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteName {
    FaultFreeSweep,
    FaultSweep,
}

impl SuiteName {
    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::FaultFreeSweep => "fault-free-sweep",
            SuiteName::FaultSweep => "fault-sweep",
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fault-free-sweep" => Ok(SuiteName::FaultFreeSweep),
            "fault-sweep" => Ok(SuiteName::FaultSweep),
            other => Err(Error::Config(format!("unknown suite {other:?}"))),
        }
    }
}

fn default_sizes() -> Vec<usize> {
    (3..=10).map(|d| 1 << d).collect()
}
fn default_n() -> usize {
    512
}
fn default_max_crashes() -> usize {
    8
}
fn default_seeds() -> u64 {
    100
}
fn default_messages() -> u32 {
    10
}

/// Suite configuration; loadable from TOML with the field names below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    pub suite: SuiteName,
    pub protocols: Vec<ProtocolName>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_max_crashes")]
    pub max_crashes: usize,
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default = "default_messages")]
    pub messages: u32,
    #[serde(default)]
    pub timing: Option<TimingSpec>,
    #[serde(default)]
    pub detector: Option<DetectorSpec>,
}

impl SuiteSpec {
    /// Sizes 8 through 1024.
    pub fn fault_free_sweep(protocols: Vec<ProtocolName>) -> Self {
        SuiteSpec {
            suite: SuiteName::FaultFreeSweep,
            protocols,
            seed: 0,
            sizes: default_sizes(),
            n: default_n(),
            max_crashes: default_max_crashes(),
            seeds: default_seeds(),
            messages: default_messages(),
            timing: None,
            detector: None,
        }
    }

    /// n = 512, 0 to 8 crashes, 100 scenarios each, 10 messages from process 0.
    pub fn fault_sweep(protocols: Vec<ProtocolName>) -> Self {
        SuiteSpec {
            suite: SuiteName::FaultSweep,
            ..SuiteSpec::fault_free_sweep(protocols)
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        SuiteSpec::from_toml(&std::fs::read_to_string(path)?)
    }

    fn scenario(&self, n: usize, protocol: ProtocolName, messages: u32) -> Scenario {
        let mut s = Scenario::new(n, protocol, vec![0], messages);
        s.timing = self.timing;
        s.detector = self.detector;
        s
    }

    /// Seed of scenario `i` at crash count `f`.
    pub fn scenario_seed(&self, f: usize, i: u64) -> u64 {
        self.seed
            .wrapping_add((f as u64).wrapping_mul(1_000_003))
            .wrapping_add(i)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaultFreeRow {
    pub p: usize,
    /// `None` if some process did not deliver.
    pub latency: Option<f64>,
}

impl FaultFreeRow {
    pub fn throughput(&self) -> Option<f64> {
        self.latency.map(|l| 1.0 / l)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaultRow {
    pub f: usize,
    pub latency: f64,
    pub latency_std: f64,
    pub tree: f64,
    pub ack: f64,
    pub nack: f64,
    pub total_std: f64,
    pub runs: u64,
    pub failed: u64,
}

impl FaultRow {
    pub fn total(&self) -> f64 {
        self.tree + self.ack + self.nack
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SuiteTable {
    FaultFree(Vec<FaultFreeRow>),
    Fault(Vec<FaultRow>),
}

fn num(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.6}"),
        _ => "nan".to_string(),
    }
}

impl SuiteTable {
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        match self {
            SuiteTable::FaultFree(rows) => {
                s.push_str("p\tlatency\tthroughput\n");
                for r in rows {
                    let _ = writeln!(s, "{}\t{}\t{}", r.p, num(r.latency), num(r.throughput()));
                }
            }
            SuiteTable::Fault(rows) => {
                s.push_str("f\tlatency\tdesvpad2\tTREE\tACK\tNACK\tdesvpad1\tfailed\n");
                for r in rows {
                    let _ = writeln!(
                        s,
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                        r.f,
                        num(Some(r.latency)),
                        num(Some(r.latency_std)),
                        num(Some(r.tree)),
                        num(Some(r.ack)),
                        num(Some(r.nack)),
                        num(Some(r.total_std)),
                        r.failed
                    );
                }
            }
        }
        s
    }

    pub fn fault_free(&self) -> Option<&[FaultFreeRow]> {
        match self {
            SuiteTable::FaultFree(rows) => Some(rows),
            SuiteTable::Fault(_) => None,
        }
    }

    pub fn fault(&self) -> Option<&[FaultRow]> {
        match self {
            SuiteTable::Fault(rows) => Some(rows),
            SuiteTable::FaultFree(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOutput {
    pub suite: SuiteName,
    pub tables: Vec<(ProtocolName, SuiteTable)>,
}

impl SuiteOutput {
    pub fn table(&self, protocol: ProtocolName) -> Option<&SuiteTable> {
        self.tables
            .iter()
            .find(|(p, _)| *p == protocol)
            .map(|(_, t)| t)
    }

    pub fn file_name(&self, protocol: ProtocolName) -> String {
        format!("{}.{}.tsv", self.suite, protocol)
    }

    /// Writes one file per protocol into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for (protocol, table) in &self.tables {
            let path = dir.join(self.file_name(*protocol));
            std::fs::write(&path, table.to_tsv())?;
            paths.push(path);
        }
        Ok(paths)
    }
}

pub fn run_suite(spec: &SuiteSpec) -> Result<SuiteOutput> {
    if spec.protocols.is_empty() {
        return Err(Error::Config("suite lists no protocols".into()));
    }
    let mut tables = Vec::new();
    for &protocol in &spec.protocols {
        let table = match spec.suite {
            SuiteName::FaultFreeSweep => SuiteTable::FaultFree(fault_free_sweep(spec, protocol)?),
            SuiteName::FaultSweep => SuiteTable::Fault(fault_sweep(spec, protocol)?),
        };
        tables.push((protocol, table));
    }
    Ok(SuiteOutput {
        suite: spec.suite,
        tables,
    })
}

fn fault_free_sweep(spec: &SuiteSpec, protocol: ProtocolName) -> Result<Vec<FaultFreeRow>> {
    let mut sizes = spec.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    for &n in &sizes {
        spec.scenario(n, protocol, 1).validate()?;
    }
    sizes
        .par_iter()
        .map(|&n| {
            let trace = spec.scenario(n, protocol, 1).run(RunOptions::summary())?;
            let latency = broadcasts(&trace)
                .first()
                .and_then(|&id| latency_of(&trace, id).ok())
                .map(|l| l.as_units());
            Ok(FaultFreeRow { p: n, latency })
        })
        .collect()
}

/// Per-run outcome of a fault scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    /// Mean latency over messages whose source never crashed.
    pub latency: Option<f64>,
    pub counts: MessageCounts,
    /// A never-crashed source's message missed some correct process, or the
    /// run did not reach quiescence.
    pub failed: bool,
}

pub fn outcome_of(trace: &Trace) -> RunOutcome {
    let mut lat = Vec::new();
    let mut failed = trace.truncated;
    for id in broadcasts(trace) {
        if !trace.crashes.is_correct(id.source) {
            continue;
        }
        match latency_of(trace, id) {
            Ok(l) => lat.push(l.as_units()),
            Err(_) => failed = true,
        }
    }
    RunOutcome {
        latency: (!lat.is_empty()).then(|| mean_std(&lat).0),
        counts: trace.counts,
        failed,
    }
}

fn fault_sweep(spec: &SuiteSpec, protocol: ProtocolName) -> Result<Vec<FaultRow>> {
    let base = spec.scenario(spec.n, protocol, spec.messages);
    base.validate()?;
    if spec.max_crashes >= spec.n {
        return Err(Error::Config(format!(
            "max_crashes {} must be below n = {}",
            spec.max_crashes, spec.n
        )));
    }
    let window = base.window()?;
    let fault_free = outcome_of(&base.run(RunOptions::summary())?);

    let jobs: Vec<(usize, u64)> = (1..=spec.max_crashes)
        .flat_map(|f| (0..spec.seeds).map(move |i| (f, i)))
        .collect();
    let outcomes: Vec<RunOutcome> = jobs
        .par_iter()
        .map(|&(f, i)| {
            let mut s = base.clone();
            s.seed = spec.scenario_seed(f, i);
            s.crashes.count = f;
            let result = s.schedule_in(window).and_then(|sched| {
                crate::sim::run(
                    &s.config()?,
                    &sched,
                    &s.workload()?,
                    protocol,
                    RunOptions::summary(),
                )
            });
            match result {
                Ok(trace) => outcome_of(&trace),
                Err(e) => {
                    log::error!("{protocol} f={f} seed={}: {e}", s.seed);
                    RunOutcome {
                        latency: None,
                        counts: MessageCounts::default(),
                        failed: true,
                    }
                }
            }
        })
        .collect();

    let mut rows = vec![aggregate(0, &vec![fault_free; spec.seeds as usize])];
    for (f, chunk) in (1..=spec.max_crashes).zip(outcomes.chunks(spec.seeds.max(1) as usize)) {
        rows.push(aggregate(f, chunk));
    }
    Ok(rows)
}

fn aggregate(f: usize, runs: &[RunOutcome]) -> FaultRow {
    let ok: Vec<&RunOutcome> = runs.iter().filter(|r| !r.failed).collect();
    let lat: Vec<f64> = ok.iter().filter_map(|r| r.latency).collect();
    let field = |g: fn(&MessageCounts) -> u64| {
        let v: Vec<f64> = ok.iter().map(|r| g(&r.counts) as f64).collect();
        mean_std(&v).0
    };
    let totals: Vec<f64> = ok.iter().map(|r| r.counts.total() as f64).collect();
    let (latency, latency_std) = mean_std(&lat);
    FaultRow {
        f,
        latency,
        latency_std,
        tree: field(|c| c.tree),
        ack: field(|c| c.ack),
        nack: field(|c| c.nack),
        total_std: mean_std(&totals).1,
        runs: runs.len() as u64,
        failed: (runs.len() - ok.len()) as u64,
    }
}
