//! Acceptance checks, runnable from the command line and from tests.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use crate::enumerate::{candidate_times, map_crash_timings, run_count, DEFAULT_CAP};
use crate::error::{Error, Result};
use crate::failure::CrashSchedule;
use crate::metrics::{deliveries, tree_edges, TreeShape};
use crate::protocol::{MessageId, MessageKind, ProtocolName};
use crate::scenario::Scenario;
use crate::sim::{run, AppBroadcast, RunOptions, SystemConfig, Trace, TraceAction};
use crate::suite::{run_suite, SuiteSpec};
use crate::time::SimTime;
use crate::topology::{ProcessId, Topology};

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    /// Scenarios per crash count in the fault sweep.
    pub fault_sweep_seeds: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            fault_sweep_seeds: 100,
        }
    }
}

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "tree shape n=8"),
    (2, "fault-free message count"),
    (3, "extra messages after a crash"),
    (4, "one-to-all latency"),
    (5, "exhaustive single/double crash delivery"),
    (6, "reliable agreement under source crash"),
    (7, "tree structural bounds"),
    (8, "latency/throughput crossover"),
    (9, "fault-sweep message totals"),
    (10, "determinism"),
];

pub fn check(id: u8, opts: &VerifyOptions) -> Outcome {
    let name = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map_or("unknown", |(_, n)| n);
    let started = Instant::now();
    let result = match id {
        1 => tree_shape(),
        2 => fault_free_count(),
        3 => extra_messages(),
        4 => all_latency(),
        5 => exhaustive_delivery(),
        6 => reliable_agreement(),
        7 => structural_bounds(),
        8 => crossover(),
        9 => fault_sweep_totals(opts),
        10 => determinism(),
        _ => Err(Error::Config(format!("no criterion {id}"))),
    };
    let elapsed = started.elapsed();
    let (mut passed, mut detail) = match result {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let limit = match id {
        1 => Some(Duration::from_secs(1)),
        2 => Some(Duration::from_secs(10)),
        5 => Some(Duration::from_secs(300)),
        9 => Some(Duration::from_secs(1800)),
        _ => None,
    };
    if let Some(limit) = limit {
        if elapsed > limit {
            passed = false;
            detail.push_str(&format!("; over the {}s limit", limit.as_secs()));
        }
    }
    Outcome {
        id,
        name,
        passed,
        detail,
        elapsed,
    }
}

pub fn check_all(opts: &VerifyOptions) -> Vec<Outcome> {
    CRITERIA.iter().map(|&(id, _)| check(id, opts)).collect()
}

type Check = Result<(bool, String)>;

fn p(i: u32) -> ProcessId {
    ProcessId(i)
}

fn at(u: f64) -> SimTime {
    SimTime::from_units(u).expect("constant")
}

fn single(
    n: usize,
    protocol: ProtocolName,
    schedule: &CrashSchedule,
    start: SimTime,
) -> Result<Trace> {
    run(
        &SystemConfig::new(n),
        schedule,
        &[AppBroadcast::new(start, p(0))],
        protocol,
        RunOptions::default(),
    )
}

fn edge_set(edges: &[(u32, u32)]) -> BTreeSet<(ProcessId, ProcessId)> {
    edges.iter().map(|&(a, b)| (p(a), p(b))).collect()
}

fn fmt_edges(edges: &BTreeSet<(ProcessId, ProcessId)>) -> String {
    let v: Vec<String> = edges.iter().map(|(a, b)| format!("{a}->{b}")).collect();
    v.join(",")
}

fn tree_shape() -> Check {
    let fault_free = tree_edges(&single(
        8,
        ProtocolName::AtreeB,
        &CrashSchedule::new(),
        SimTime::ZERO,
    )?);
    let want_a = edge_set(&[(0, 1), (0, 2), (0, 4), (2, 3), (4, 5), (4, 6), (6, 7)]);
    let crashed = CrashSchedule::from_entries([(p(4), SimTime::ZERO)])?;
    let with_crash = tree_edges(&single(8, ProtocolName::AtreeB, &crashed, at(5.0))?);
    let want_b = edge_set(&[(0, 1), (0, 2), (0, 5), (2, 3), (5, 7), (7, 6)]);
    Ok((
        fault_free == want_a && with_crash == want_b,
        format!(
            "fault-free {{{}}}, p4 crashed {{{}}}",
            fmt_edges(&fault_free),
            fmt_edges(&with_crash)
        ),
    ))
}

fn fault_free_count() -> Check {
    let mut bad = Vec::new();
    for d in 1..=10 {
        let n = 1usize << d;
        let c = single(
            n,
            ProtocolName::AtreeB,
            &CrashSchedule::new(),
            SimTime::ZERO,
        )?
        .counts;
        let want = 2 * (n as u64 - 1);
        if c.total() != want || c.nack != 0 || c.tree != c.ack {
            bad.push(format!("n={n}: {} (want {want})", c.total()));
        }
    }
    Ok(match bad.is_empty() {
        true => (true, "2(n-1) messages for n = 2..1024".into()),
        false => (false, bad.join("; ")),
    })
}

/// Crashed process `j = 2^(s-1)` in cluster `s` of source 0 with `f - 1`
/// further members of that cluster already crashed before the broadcast.
/// `j` crashes right when it would acknowledge to the source.
pub fn extra_messages_case(n: usize, s: u32, f: usize) -> Result<(i64, i64)> {
    let topo = Topology::new(n)?;
    let members = topo.cluster_members(p(0), s)?;
    let n_prime = members.len() as i64;
    if f == 0 || f > members.len() {
        return Err(Error::Config(format!(
            "f = {f} out of range for cluster {s}"
        )));
    }
    let j = members[0];
    let start = at(5.0);
    let mut pre = CrashSchedule::new();
    for &q in &members[1..f] {
        pre.add(q, SimTime::ZERO)?;
    }
    let base = single(n, ProtocolName::AtreeB, &pre, start)?;
    let ack_at = base
        .records_of(TraceAction::Send)
        .find(|r| r.process == j && r.kind == Some(MessageKind::Ack) && r.counterpart == Some(p(0)))
        .ok_or_else(|| Error::Config(format!("{j} never acknowledged to 0")))?
        .time;
    let mut faulty = pre.clone();
    faulty.add(j, ack_at)?;
    let trace = single(n, ProtocolName::AtreeB, &faulty, start)?;
    let id = MessageId::new(p(0), 1);
    crate::metrics::latency_of(&trace, id)?;
    let extra = trace.counts.total() as i64 - base.counts.total() as i64;
    Ok((extra, 1 + 2 * (n_prime - 1 - f as i64)))
}

fn extra_messages() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (s, f) in [(3, 1), (3, 2), (4, 1)] {
        let (got, want) = extra_messages_case(16, s, f)?;
        ok &= got == want;
        parts.push(format!("(s={s},f={f}) extra {got} want {want}"));
    }
    Ok((ok, parts.join("; ")))
}

fn all_latency() -> Check {
    let t = crate::sim::TimingParams::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [8usize, 64, 512] {
        let trace = single(n, ProtocolName::AllB, &CrashSchedule::new(), SimTime::ZERO)?;
        let got = crate::metrics::latency_of(&trace, MessageId::new(p(0), 1))?;
        let want = t.send * (n as u64 - 2) + t.transmit + t.receive;
        ok &= got == want;
        parts.push(format!("n={n}: {got} want {want}"));
    }
    Ok((ok, parts.join("; ")))
}

/// Every never-crashed process delivered `id` exactly once.
fn delivered_once(trace: &Trace, id: MessageId) -> bool {
    let per = deliveries(trace);
    !trace.truncated
        && (0..trace.n).all(|i| {
            let count = per[i].iter().filter(|&&m| m == id).count();
            if trace.crashes.is_correct(p(i as u32)) {
                count == 1
            } else {
                count <= 1
            }
        })
}

fn exhaustive_delivery() -> Check {
    let n = 8;
    let config = SystemConfig::new(n);
    let workload = [AppBroadcast::new(SimTime::ZERO, p(0))];
    let id = MessageId::new(p(0), 1);
    let others: Vec<ProcessId> = (1..n as u32).map(p).collect();
    let mut sets: Vec<Vec<ProcessId>> = others.iter().map(|&a| vec![a]).collect();
    for (i, &a) in others.iter().enumerate() {
        for &b in &others[i + 1..] {
            sets.push(vec![a, b]);
        }
    }
    let base = run(
        &config,
        &CrashSchedule::new(),
        &workload,
        ProtocolName::AtreeB,
        RunOptions::default(),
    )?;
    let times = candidate_times(&config, &base).len();
    let planned: u64 = sets.iter().map(|s| run_count(times, s.len())).sum();
    if planned >= 100_000 {
        return Ok((false, format!("{planned} runs planned, bound is 10^5")));
    }
    let mut runs = 0u64;
    let mut violations = Vec::new();
    for set in &sets {
        let results = map_crash_timings(
            &config,
            &workload,
            ProtocolName::AtreeB,
            set,
            DEFAULT_CAP,
            |sched, trace| (delivered_once(&trace, id), sched.clone()),
        )?;
        runs += results.len() as u64;
        violations.extend(results.into_iter().filter(|(ok, _)| !ok).map(|(_, s)| s));
    }
    let detail = match violations.first() {
        None => format!("{runs} runs over {times} crash instants, 0 violations"),
        Some(s) => format!(
            "{} violations in {runs} runs, first {:?}",
            violations.len(),
            s.iter().collect::<Vec<_>>()
        ),
    };
    Ok((violations.is_empty(), detail))
}

fn reliable_agreement() -> Check {
    let config = SystemConfig::new(8);
    let workload = [
        AppBroadcast::new(SimTime::ZERO, p(0)),
        AppBroadcast::new(SimTime::ZERO, p(0)),
    ];
    let results = map_crash_timings(
        &config,
        &workload,
        ProtocolName::AtreeR,
        &[p(0)],
        DEFAULT_CAP,
        |sched, trace| {
            let per = deliveries(&trace);
            let survivors: Vec<usize> = (1..trace.n).collect();
            let sets: Vec<BTreeSet<MessageId>> = survivors
                .iter()
                .map(|&i| per[i].iter().copied().collect())
                .collect();
            let no_dups = survivors.iter().all(|&i| per[i].len() == sets[i - 1].len());
            let agree = sets.windows(2).all(|w| w[0] == w[1]);
            (
                agree && no_dups && !trace.truncated,
                sched.clone(),
                sets[0].len(),
            )
        },
    )?;
    let bad: Vec<_> = results.iter().filter(|r| !r.0).collect();
    let sizes: BTreeSet<usize> = results.iter().map(|r| r.2).collect();
    Ok((
        bad.is_empty(),
        format!(
            "{} source crash instants, {} violations, delivered-set sizes {:?}",
            results.len(),
            bad.len(),
            sizes
        ),
    ))
}

fn structural_bounds() -> Check {
    let mut bad = Vec::new();
    for d in 1..=10u32 {
        let n = 1usize << d;
        let trace = single(
            n,
            ProtocolName::AtreeB,
            &CrashSchedule::new(),
            SimTime::ZERO,
        )?;
        let shape = TreeShape::from_edges(p(0), &tree_edges(&trace))?;
        let d = d as usize;
        if shape.reached != n
            || shape.depth > d
            || shape.out_degree(p(0)) != d
            || shape.max_out_degree() > d
        {
            bad.push(format!(
                "n={n}: reached {} depth {} root {} max {}",
                shape.reached,
                shape.depth,
                shape.out_degree(p(0)),
                shape.max_out_degree()
            ));
        }
    }
    Ok(match bad.is_empty() {
        true => (
            true,
            "depth <= log2 n, root degree = log2 n, fan-out <= log2 n for n = 2..1024".into(),
        ),
        false => (false, bad.join("; ")),
    })
}

fn crossover() -> Check {
    let spec = SuiteSpec::fault_free_sweep(vec![ProtocolName::AtreeB, ProtocolName::AllB]);
    let out = run_suite(&spec)?;
    let rows = |proto| {
        out.table(proto)
            .and_then(|t| t.fault_free())
            .map(|r| r.to_vec())
            .ok_or_else(|| Error::Config("missing table".into()))
    };
    let atree = rows(ProtocolName::AtreeB)?;
    let all = rows(ProtocolName::AllB)?;
    let lat = |rows: &[crate::suite::FaultFreeRow], n| {
        rows.iter()
            .find(|r| r.p == n)
            .and_then(|r| r.latency)
            .unwrap_or(f64::NAN)
    };
    let small = lat(&atree, 8) > lat(&all, 8);
    let large = lat(&atree, 1024) < lat(&all, 1024);
    let mut thr = true;
    for (a, b) in atree.iter().zip(&all).filter(|(a, _)| a.p >= 256) {
        thr &= a.throughput().unwrap_or(0.0) > b.throughput().unwrap_or(f64::INFINITY);
    }
    let first_better = atree
        .iter()
        .zip(&all)
        .find(|(a, b)| a.latency < b.latency)
        .map_or(0, |(a, _)| a.p);
    Ok((
        small && large && thr,
        format!(
            "n=8 ATREE {} vs ALL {}; n=1024 ATREE {} vs ALL {}; ATREE ahead from n={first_better}",
            lat(&atree, 8),
            lat(&all, 8),
            lat(&atree, 1024),
            lat(&all, 1024)
        ),
    ))
}

fn fault_sweep_totals(opts: &VerifyOptions) -> Check {
    let mut spec = SuiteSpec::fault_sweep(vec![
        ProtocolName::AtreeB,
        ProtocolName::AllB,
        ProtocolName::NatreeB,
    ]);
    spec.seeds = opts.fault_sweep_seeds;
    let out = run_suite(&spec)?;
    let rows = |proto| {
        out.table(proto)
            .and_then(|t| t.fault())
            .map(|r| r.to_vec())
            .ok_or_else(|| Error::Config("missing table".into()))
    };
    let atree = rows(ProtocolName::AtreeB)?;
    let all = rows(ProtocolName::AllB)?;
    let natree = rows(ProtocolName::NatreeB)?;
    let mut ok = true;
    let mut worst_gap: f64 = 0.0;
    let mut min_ratio = f64::INFINITY;
    for f in 1..=spec.max_crashes {
        let (a, l, t) = (&atree[f], &all[f], &natree[f]);
        ok &= t.total() > a.total();
        let gap = (a.total() - l.total()).abs() / l.total();
        ok &= gap <= 0.05;
        worst_gap = worst_gap.max(gap);
        min_ratio = min_ratio.min(t.total() / a.total());
    }
    let failed: u64 = atree.iter().chain(&all).map(|r| r.failed).sum();
    Ok((
        ok,
        format!(
            "{} seeds: NATREE/ATREE total >= {min_ratio:.1}x, max |ATREE-ALL|/ALL {:.3}%, {failed} failed ATREE/ALL runs",
            spec.seeds,
            worst_gap * 100.0
        ),
    ))
}

fn determinism() -> Check {
    let mut same = true;
    for (k, protocol) in ProtocolName::ALL.into_iter().enumerate() {
        let mut s = Scenario::new(32, protocol, vec![0, 5], 3);
        s.seed = 11 + k as u64;
        s.crashes.count = 3;
        let a = s.run(RunOptions::default())?;
        let b = s.run(RunOptions::default())?;
        same &= a == b && a.to_text() == b.to_text();
    }
    let mut spec = SuiteSpec::fault_sweep(vec![
        ProtocolName::AtreeB,
        ProtocolName::AllR,
        ProtocolName::NatreeB,
    ]);
    spec.n = 32;
    spec.max_crashes = 3;
    spec.seeds = 8;
    spec.messages = 3;
    spec.seed = 99;
    let tsv = |spec: &SuiteSpec| -> Result<Vec<String>> {
        Ok(run_suite(spec)?
            .tables
            .iter()
            .map(|(_, t)| t.to_tsv())
            .collect())
    };
    same &= tsv(&spec)? == tsv(&spec)?;
    let mut ff = SuiteSpec::fault_free_sweep(vec![ProtocolName::AtreeR, ProtocolName::NatreeR]);
    ff.sizes = vec![8, 16, 32, 64];
    same &= tsv(&ff)? == tsv(&ff)?;
    Ok((
        same,
        "traces of every protocol and fault / fault-free suite TSVs identical on re-run".into(),
    ))
}
