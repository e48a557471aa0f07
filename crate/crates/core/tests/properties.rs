use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use vcube::metrics::{broadcasts, deliveries, latency_of, mean_std, tree_edges, TreeShape};
use vcube::scenario::Scenario;
use vcube::{
    run, AppBroadcast, CrashSchedule, DetectorPolicy, MessageId, ProcessId, ProtocolName,
    RunOptions, SimTime, SystemConfig, Topology, Trace, TraceAction, View,
};

const DELIVERING: [ProtocolName; 6] = [
    ProtocolName::AtreeB,
    ProtocolName::AtreeR,
    ProtocolName::AllB,
    ProtocolName::AllR,
    ProtocolName::NatreeB,
    ProtocolName::NatreeR,
];

#[derive(Clone, Debug)]
struct Case {
    n: usize,
    protocol: ProtocolName,
    workload: Vec<AppBroadcast>,
    crashes: CrashSchedule,
}

impl Case {
    fn run(&self) -> Trace {
        run(
            &SystemConfig::new(self.n),
            &self.crashes,
            &self.workload,
            self.protocol,
            RunOptions::default(),
        )
        .unwrap()
    }
}

fn case() -> impl Strategy<Value = Case> {
    (1u32..=5, prop::sample::select(DELIVERING.to_vec()))
        .prop_flat_map(|(d, protocol)| {
            let n = 1usize << d;
            let sources = prop::collection::btree_set(0..n as u32, 1..=2.min(n));
            let requests = prop::collection::vec((0usize..2, 0u32..60), 1..=3);
            let crashes = prop::collection::btree_map(0..n as u32, 0u32..250, 0..=3.min(n - 1));
            (Just(n), Just(protocol), sources, requests, crashes)
        })
        .prop_map(|(n, protocol, sources, requests, crashes)| {
            let sources: Vec<u32> = sources.into_iter().collect();
            let mut workload: Vec<AppBroadcast> = requests
                .into_iter()
                .map(|(k, at)| AppBroadcast::new(tenths(at), ProcessId(sources[k % sources.len()])))
                .collect();
            workload.sort_by_key(|w| w.at);
            // Best-effort guarantees only cover correct sources.
            let protected: BTreeSet<u32> = if protocol.is_reliable() {
                BTreeSet::new()
            } else {
                sources.iter().copied().collect()
            };
            let mut schedule = CrashSchedule::new();
            for (p, at) in crashes {
                if !protected.contains(&p) {
                    schedule.add(ProcessId(p), tenths(at)).unwrap();
                }
            }
            Case {
                n,
                protocol,
                workload,
                crashes: schedule,
            }
        })
}

fn tenths(k: u32) -> SimTime {
    SimTime::from_units(f64::from(k) / 10.0).unwrap()
}

fn correct(trace: &Trace) -> Vec<usize> {
    (0..trace.n)
        .filter(|&i| trace.crashes.is_correct(ProcessId(i as u32)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clusters_partition_and_are_symmetric(d in 1u32..=10, i in any::<u32>(), j in any::<u32>()) {
        let n = 1u32 << d;
        let (i, j) = (i % n, j % n);
        let topo = Topology::new(n as usize).unwrap();
        let mut seen = BTreeSet::new();
        for s in 1..=d {
            let members = topo.cluster_members(ProcessId(i), s).unwrap();
            prop_assert_eq!(members.len(), 1usize << (s - 1));
            prop_assert_eq!(members[0].0, i ^ (1 << (s - 1)));
            for m in members {
                prop_assert!(seen.insert(m.0));
                prop_assert_eq!(topo.cluster_index(ProcessId(i), m).unwrap().get(), s);
            }
        }
        prop_assert_eq!(seen.len(), n as usize - 1);
        prop_assert!(!seen.contains(&i));
        if i != j {
            prop_assert_eq!(
                topo.cluster_index(ProcessId(i), ProcessId(j)).unwrap(),
                topo.cluster_index(ProcessId(j), ProcessId(i)).unwrap()
            );
        } else {
            prop_assert!(topo.cluster_index(ProcessId(i), ProcessId(j)).is_err());
        }
    }

    #[test]
    fn ff_neighbor_is_first_correct_member(
        d in 1u32..=8,
        owner in any::<u32>(),
        crashed in prop::collection::vec(any::<u32>(), 0..40),
    ) {
        let n = 1u32 << d;
        let owner = ProcessId(owner % n);
        let topo = Topology::new(n as usize).unwrap();
        let mut view = View::all_correct(owner, n as usize);
        for c in crashed {
            if c % n != owner.0 {
                view.remove(ProcessId(c % n));
            }
        }
        let mut hood = BTreeSet::new();
        for s in 1..=d {
            let members = topo.cluster_members(owner, s).unwrap();
            let ff = topo.ff_neighbor(&view, s).unwrap();
            let first = members.iter().copied().find(|m| view.contains(*m));
            prop_assert_eq!(ff, first);
            hood.extend(ff);
            let got: BTreeSet<_> = topo.neighborhood(&view, s).unwrap().into_iter().collect();
            prop_assert_eq!(&got, &hood);
        }
        prop_assert!(hood.len() <= d as usize);
        prop_assert!(topo.neighborhood(&view, 0).unwrap().is_empty());
    }

    #[test]
    fn fault_free_tree_is_logarithmic(d in 1u32..=10, root in any::<u32>()) {
        let n = 1usize << d;
        let root = ProcessId(root % n as u32);
        let workload = [AppBroadcast::new(SimTime::ZERO, root)];
        let t = run(&SystemConfig::new(n), &CrashSchedule::new(), &workload, ProtocolName::Tree, RunOptions::default()).unwrap();
        let shape = TreeShape::from_edges(root, &tree_edges(&t)).unwrap();
        prop_assert_eq!(shape.reached, n);
        prop_assert!(shape.depth <= d as usize);
        prop_assert_eq!(shape.out_degree(root), d as usize);
        prop_assert!(shape.max_out_degree() <= d as usize);
        prop_assert_eq!(t.counts.tree, n as u64 - 1);
    }

    #[test]
    fn every_receive_matches_a_send(c in case()) {
        let t = c.run();
        let timing = SystemConfig::new(c.n).timing;
        let mut sent: BTreeMap<_, usize> = BTreeMap::new();
        for r in t.records_of(TraceAction::Send) {
            prop_assert_eq!(r.arrival.unwrap(), r.time + timing.send + timing.transmit);
            *sent.entry((r.process, r.counterpart.unwrap(), r.kind, r.id, r.arrival)).or_default() += 1;
        }
        for r in t.records_of(TraceAction::Receive) {
            prop_assert!(r.time >= r.arrival.unwrap());
            let key = (r.counterpart.unwrap(), r.process, r.kind, r.id, r.arrival);
            let left = sent.get_mut(&key);
            prop_assert!(left.as_ref().is_some_and(|k| **k > 0), "unmatched receive {:?}", r);
            *left.unwrap() -= 1;
        }
    }

    #[test]
    fn busy_periods_do_not_overlap(c in case()) {
        let t = c.run();
        let timing = SystemConfig::new(c.n).timing;
        let mut spans: Vec<Vec<(SimTime, SimTime)>> = vec![Vec::new(); c.n];
        for r in &t.records {
            let cost = match r.action {
                TraceAction::Send => timing.send,
                TraceAction::Receive => timing.receive,
                _ => continue,
            };
            spans[r.process.index()].push((r.time, r.time + cost));
        }
        for s in &mut spans {
            s.sort();
            for w in s.windows(2) {
                prop_assert!(w[0].1 <= w[1].0, "overlap {:?} {:?}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn crashed_processes_stay_silent(c in case()) {
        let t = c.run();
        let timing = SystemConfig::new(c.n).timing;
        for r in &t.records {
            let Some(at) = t.crashes.crash_time(r.process) else { continue };
            match r.action {
                TraceAction::Crash => prop_assert_eq!(r.time, at),
                TraceAction::Send => prop_assert!(r.time + timing.send < at),
                _ => prop_assert!(r.time < at, "{:?} after crash at {}", r, at),
            }
        }
    }

    #[test]
    fn detection_follows_the_policy(c in case()) {
        let t = c.run();
        let policy = DetectorPolicy::for_timing(&SystemConfig::new(c.n).timing);
        let mut seen = BTreeSet::new();
        for r in t.records_of(TraceAction::Detect) {
            let j = r.counterpart.unwrap();
            let crash = t.crashes.crash_time(j).unwrap();
            prop_assert!(r.time >= policy.detection_time(r.process, j, crash).unwrap());
            prop_assert!(seen.insert((r.process, j)));
        }
        for (j, _) in t.crashes.iter() {
            for i in correct(&t) {
                prop_assert!(seen.contains(&(ProcessId(i as u32), j)));
            }
        }
    }

    #[test]
    fn runs_are_deterministic(c in case()) {
        prop_assert_eq!(c.run().to_text(), c.run().to_text());
    }

    #[test]
    fn deliveries_are_unique_and_genuine(c in case()) {
        let t = c.run();
        prop_assert!(!t.truncated);
        let sent: BTreeSet<MessageId> = broadcasts(&t).into_iter().collect();
        for d in deliveries(&t) {
            let set: BTreeSet<_> = d.iter().copied().collect();
            prop_assert_eq!(set.len(), d.len(), "duplicate delivery");
            prop_assert!(set.is_subset(&sent));
        }
    }

    #[test]
    fn correct_sources_reach_everyone(c in case()) {
        let t = c.run();
        for id in broadcasts(&t) {
            if t.crashes.is_correct(id.source) {
                prop_assert!(latency_of(&t, id).is_ok(), "{} undelivered under {}", id, c.protocol);
            }
        }
    }

    #[test]
    fn reliable_survivors_agree(c in case()) {
        prop_assume!(c.protocol.is_reliable());
        let t = c.run();
        let per = deliveries(&t);
        let sets: Vec<BTreeSet<_>> = correct(&t).into_iter().map(|i| per[i].iter().copied().collect()).collect();
        for s in &sets[1..] {
            prop_assert_eq!(s, &sets[0]);
        }
    }

    #[test]
    fn scenario_crashes_are_reproducible(seed in any::<u64>(), count in 0usize..6, reliable in any::<bool>()) {
        let protocol = if reliable { ProtocolName::AtreeR } else { ProtocolName::AtreeB };
        let mut s = Scenario::new(16, protocol, vec![0, 3], 2);
        s.seed = seed;
        s.crashes.count = count;
        let window = s.window().unwrap();
        let a = s.schedule_in(window).unwrap();
        prop_assert_eq!(&a, &s.schedule_in(window).unwrap());
        prop_assert_eq!(a.len(), count);
        for (p, at) in a.iter() {
            prop_assert!(at >= window.0 && at <= window.1);
            if !reliable {
                prop_assert!(p != ProcessId(0) && p != ProcessId(3));
            }
        }
    }

    #[test]
    fn mean_std_matches_definition(v in prop::collection::vec(-1e3f64..1e3, 1..50)) {
        let (m, s) = mean_std(&v);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
        prop_assert!((m - mean).abs() < 1e-9);
        prop_assert!((s - var.sqrt()).abs() < 1e-6);
    }
}
