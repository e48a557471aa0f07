//! Deterministic discrete-event kernel.
//!
//! Every process has a busy timeline. Inputs (message arrivals, failure
//! notifications, application broadcasts) queue FIFO on the receiving
//! process and are serviced one at a time:
//!
//! * a received message costs `t_r`, notifications and broadcasts cost nothing;
//! * RECEIVE and DELIVER are recorded when service starts;
//! * sends emitted by the handler start once the service cost has elapsed and
//!   occupy the sender for `t_s` each, back to back;
//! * a copy leaves only if the sender is still alive when its send completes,
//!   and it arrives `t_t` later.
//!
//! Events at equal times run in creation order, so a run is a pure function
//! of its inputs.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::{self, Write as _};
use std::io;
use std::sync::Arc;

use crate::baseline::NatreeProcess;
use crate::broadcast::{BroadcastProcess, Dissemination, Reliability};
use crate::error::{Error, Result};
use crate::failure::{CrashSchedule, DetectorPolicy};
use crate::protocol::{
    Action, Envelope, Input, MessageId, MessageKind, Payload, Protocol, ProtocolName,
};
use crate::time::SimTime;
use crate::topology::{ProcessId, Topology};
use crate::tree::TreeProcess;

/// Per-copy communication costs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimingParams {
    pub send: SimTime,
    pub receive: SimTime,
    pub transmit: SimTime,
}

impl Default for TimingParams {
    /// `t_s = t_r = 0.1`, `t_t = 0.8`.
    fn default() -> Self {
        TimingParams {
            send: SimTime::from_ticks(100_000),
            receive: SimTime::from_ticks(100_000),
            transmit: SimTime::from_ticks(800_000),
        }
    }
}

impl TimingParams {
    pub fn from_units(send: f64, receive: f64, transmit: f64) -> Result<Self> {
        Ok(TimingParams {
            send: SimTime::from_units(send)?,
            receive: SimTime::from_units(receive)?,
            transmit: SimTime::from_units(transmit)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemConfig {
    pub n: usize,
    pub timing: TimingParams,
    pub detector: DetectorPolicy,
}

impl SystemConfig {
    /// Default timing and the matching detector policy.
    pub fn new(n: usize) -> Self {
        let timing = TimingParams::default();
        SystemConfig {
            n,
            timing,
            detector: DetectorPolicy::for_timing(&timing),
        }
    }

    pub fn validate(&self) -> Result<()> {
        Topology::new(self.n)?;
        self.detector.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TraceAction {
    /// A broadcast was assigned its id and started at its source.
    Broadcast,
    Send,
    Receive,
    Deliver,
    /// The source collected all acknowledgements of its broadcast.
    Complete,
    Crash,
    Detect,
}

impl TraceAction {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceAction::Broadcast => "BROADCAST",
            TraceAction::Send => "SEND",
            TraceAction::Receive => "RECEIVE",
            TraceAction::Deliver => "DELIVER",
            TraceAction::Complete => "COMPLETE",
            TraceAction::Crash => "CRASH",
            TraceAction::Detect => "DETECT",
        }
    }
}

impl fmt::Display for TraceAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub process: ProcessId,
    pub action: TraceAction,
    pub kind: Option<MessageKind>,
    /// Peer of a SEND or RECEIVE, or the crashed process of a DETECT.
    pub counterpart: Option<ProcessId>,
    pub id: Option<MessageId>,
    /// For SEND and RECEIVE, when the copy reaches the receiver.
    pub arrival: Option<SimTime>,
}

impl TraceRecord {
    fn new(time: SimTime, process: ProcessId, action: TraceAction) -> Self {
        TraceRecord {
            time,
            process,
            action,
            kind: None,
            counterpart: None,
            id: None,
            arrival: None,
        }
    }
}

impl fmt::Display for TraceRecord {
    /// `time process action kind counterpart source ts`, tab separated, `-` for none.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}\t", self.time, self.process, self.action)?;
        match self.kind {
            Some(k) => write!(f, "{k}\t")?,
            None => f.write_str("-\t")?,
        }
        match self.counterpart {
            Some(p) => write!(f, "{p}\t")?,
            None => f.write_str("-\t")?,
        }
        match self.id {
            Some(id) => write!(f, "{}\t{}", id.source, id.ts),
            None => f.write_str("-\t-"),
        }
    }
}

/// SEND totals by message kind. REBUILD requests count as NACKs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MessageCounts {
    pub tree: u64,
    pub ack: u64,
    pub nack: u64,
}

impl MessageCounts {
    pub fn total(&self) -> u64 {
        self.tree + self.ack + self.nack
    }

    fn add(&mut self, kind: MessageKind) {
        match kind {
            MessageKind::Tree => self.tree += 1,
            MessageKind::Ack => self.ack += 1,
            MessageKind::Nack | MessageKind::Rebuild => self.nack += 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub time: SimTime,
    pub process: ProcessId,
    pub text: String,
}

/// Outcome of one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub n: usize,
    /// Records in time order; equal times keep the order they were produced in.
    pub records: Vec<TraceRecord>,
    pub counts: MessageCounts,
    pub crashes: CrashSchedule,
    /// When the last process went idle.
    pub end_time: SimTime,
    /// The horizon or event cap stopped the run before quiescence.
    pub truncated: bool,
    /// Never-crashed processes still waiting on someone at the end.
    pub unacknowledged: Vec<(ProcessId, Vec<ProcessId>)>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Trace {
    pub fn records_of(&self, action: TraceAction) -> impl Iterator<Item = &TraceRecord> + '_ {
        self.records.iter().filter(move |r| r.action == action)
    }

    /// Line-oriented export, one record per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            let _ = writeln!(s, "{r}");
        }
        s
    }

    pub fn write_text<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            writeln!(w, "{r}")?;
        }
        Ok(())
    }
}

/// How much of the run is kept in [`Trace::records`]. Message counts are
/// always exact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TraceLevel {
    #[default]
    Full,
    /// Drops SEND, RECEIVE and DETECT records.
    Summary,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub level: TraceLevel,
    /// Events after this time are not processed.
    pub horizon: Option<SimTime>,
    pub max_events: Option<u64>,
}

impl RunOptions {
    pub fn summary() -> Self {
        RunOptions {
            level: TraceLevel::Summary,
            ..RunOptions::default()
        }
    }
}

/// The application at `source` asks to broadcast `payload` at time `at`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AppBroadcast {
    pub at: SimTime,
    pub source: ProcessId,
    pub payload: Payload,
}

impl AppBroadcast {
    pub fn new(at: SimTime, source: ProcessId) -> Self {
        AppBroadcast {
            at,
            source,
            payload: Arc::from(Vec::new()),
        }
    }
}

/// Runs `protocol` on the given system until quiescence.
pub fn run(
    config: &SystemConfig,
    schedule: &CrashSchedule,
    workload: &[AppBroadcast],
    protocol: ProtocolName,
    options: RunOptions,
) -> Result<Trace> {
    config.validate()?;
    let topo = Arc::new(Topology::new(config.n)?);
    let bcast = |rel, dis| {
        let topo = topo.clone();
        move |p| BroadcastProcess::new(topo.clone(), p, rel, dis)
    };
    match protocol {
        ProtocolName::Tree => {
            let topo = topo.clone();
            run_with(
                config,
                schedule,
                workload,
                |p| TreeProcess::new(topo.clone(), p),
                options,
            )
        }
        ProtocolName::AtreeB => run_with(
            config,
            schedule,
            workload,
            bcast(Reliability::BestEffort, Dissemination::Tree),
            options,
        ),
        ProtocolName::AtreeR => run_with(
            config,
            schedule,
            workload,
            bcast(Reliability::Reliable, Dissemination::Tree),
            options,
        ),
        ProtocolName::AllB => run_with(
            config,
            schedule,
            workload,
            bcast(Reliability::BestEffort, Dissemination::All),
            options,
        ),
        ProtocolName::AllR => run_with(
            config,
            schedule,
            workload,
            bcast(Reliability::Reliable, Dissemination::All),
            options,
        ),
        ProtocolName::NatreeB => run_with(
            config,
            schedule,
            workload,
            |p| NatreeProcess::new(config.n, p, Reliability::BestEffort),
            options,
        ),
        ProtocolName::NatreeR => run_with(
            config,
            schedule,
            workload,
            |p| NatreeProcess::new(config.n, p, Reliability::Reliable),
            options,
        ),
    }
}

/// Runs any [`Protocol`], building one instance per process with `make`.
pub fn run_with<P, F>(
    config: &SystemConfig,
    schedule: &CrashSchedule,
    workload: &[AppBroadcast],
    make: F,
    options: RunOptions,
) -> Result<Trace>
where
    P: Protocol,
    F: FnMut(ProcessId) -> P,
{
    config.validate()?;
    schedule.validate(config.n)?;
    if let Some(b) = workload.iter().find(|b| b.source.index() >= config.n) {
        return Err(Error::ProcessOutOfRange {
            process: b.source,
            n: config.n,
        });
    }
    let mut kernel = Kernel::new(config, schedule, options, make);
    for (p, at) in schedule.iter() {
        kernel.push(at, Event::Crash(p));
    }
    for b in workload {
        kernel.push(
            b.at,
            Event::App {
                source: b.source,
                payload: b.payload.clone(),
            },
        );
    }
    kernel.run()?;
    Ok(kernel.finish())
}

enum Event<M> {
    Arrival {
        to: ProcessId,
        from: ProcessId,
        msg: M,
    },
    Crash(ProcessId),
    Detect {
        observer: ProcessId,
        crashed: ProcessId,
    },
    App {
        source: ProcessId,
        payload: Payload,
    },
    Service(ProcessId),
}

/// Pending events, bucketed by time. Within a bucket events stay in
/// creation order, which is the tie-break.
struct EventQueue<M> {
    now: SimTime,
    current: VecDeque<Event<M>>,
    later: BTreeMap<SimTime, VecDeque<Event<M>>>,
}

impl<M> EventQueue<M> {
    fn new() -> Self {
        EventQueue {
            now: SimTime::ZERO,
            current: VecDeque::new(),
            later: BTreeMap::new(),
        }
    }

    fn push(&mut self, time: SimTime, event: Event<M>) {
        debug_assert!(time >= self.now);
        if time == self.now {
            self.current.push_back(event);
        } else {
            self.later.entry(time).or_default().push_back(event);
        }
    }

    fn peek_time(&mut self) -> Option<SimTime> {
        if self.current.is_empty() {
            let (t, bucket) = self.later.pop_first()?;
            self.now = t;
            self.current = bucket;
        }
        Some(self.now)
    }

    fn pop(&mut self) -> Option<(SimTime, Event<M>)> {
        let t = self.peek_time()?;
        self.current.pop_front().map(|e| (t, e))
    }
}

enum Work<M> {
    Receive {
        from: ProcessId,
        msg: M,
        arrival: SimTime,
    },
    Detect(ProcessId),
    App(Payload),
}

struct Slot<P: Protocol> {
    proto: P,
    busy_until: SimTime,
    inbox: VecDeque<Work<P::Msg>>,
    scheduled: bool,
}

struct Kernel<'a, P: Protocol> {
    config: &'a SystemConfig,
    schedule: &'a CrashSchedule,
    options: RunOptions,
    slots: Vec<Slot<P>>,
    /// Crash time per process, `SimTime::MAX` if it never crashes.
    crash_at: Vec<SimTime>,
    queue: EventQueue<P::Msg>,
    now: SimTime,
    processed: u64,
    truncated: bool,
    records: Vec<TraceRecord>,
    counts: MessageCounts,
    diagnostics: Vec<Diagnostic>,
    out: Vec<Action<P::Msg>>,
}

impl<'a, P: Protocol> Kernel<'a, P> {
    fn new<F: FnMut(ProcessId) -> P>(
        config: &'a SystemConfig,
        schedule: &'a CrashSchedule,
        options: RunOptions,
        mut make: F,
    ) -> Self {
        let slots = (0..config.n as u32)
            .map(|i| Slot {
                proto: make(ProcessId(i)),
                busy_until: SimTime::ZERO,
                inbox: VecDeque::new(),
                scheduled: false,
            })
            .collect();
        let mut crash_at = vec![SimTime::MAX; config.n];
        for (p, t) in schedule.iter() {
            crash_at[p.index()] = t;
        }
        Kernel {
            config,
            schedule,
            options,
            slots,
            crash_at,
            queue: EventQueue::new(),
            now: SimTime::ZERO,
            processed: 0,
            truncated: false,
            records: Vec::new(),
            counts: MessageCounts::default(),
            diagnostics: Vec::new(),
            out: Vec::new(),
        }
    }

    fn push(&mut self, time: SimTime, event: Event<P::Msg>) {
        self.queue.push(time, event);
    }

    #[inline]
    fn alive(&self, p: ProcessId, t: SimTime) -> bool {
        self.crash_at[p.index()] > t
    }

    fn keep(&self, action: TraceAction) -> bool {
        self.options.level == TraceLevel::Full
            || !matches!(
                action,
                TraceAction::Send | TraceAction::Receive | TraceAction::Detect
            )
    }

    fn record(&mut self, r: TraceRecord) {
        if self.keep(r.action) {
            self.records.push(r);
        }
    }

    fn run(&mut self) -> Result<()> {
        while let Some(next) = self.queue.peek_time() {
            if self.options.horizon.is_some_and(|h| next > h)
                || self.options.max_events.is_some_and(|m| self.processed >= m)
            {
                self.truncated = true;
                break;
            }
            let (time, event) = self.queue.pop().expect("peeked");
            self.now = time;
            self.processed += 1;
            self.dispatch(time, event)?;
        }
        Ok(())
    }

    fn dispatch(&mut self, t: SimTime, event: Event<P::Msg>) -> Result<()> {
        match event {
            Event::Arrival { to, from, msg } => {
                let arrival = t;
                self.enqueue(to, t, Work::Receive { from, msg, arrival });
            }
            Event::Crash(p) => {
                self.record(TraceRecord::new(t, p, TraceAction::Crash));
                self.slots[p.index()].inbox.clear();
                for o in 0..self.config.n as u32 {
                    let observer = ProcessId(o);
                    if observer == p {
                        continue;
                    }
                    let at = self.config.detector.detection_time(observer, p, t)?;
                    self.push(
                        at,
                        Event::Detect {
                            observer,
                            crashed: p,
                        },
                    );
                }
            }
            Event::Detect { observer, crashed } => {
                self.enqueue(observer, t, Work::Detect(crashed));
            }
            Event::App { source, payload } => {
                self.enqueue(source, t, Work::App(payload));
            }
            Event::Service(p) => {
                self.slots[p.index()].scheduled = false;
                self.serve(p, t);
            }
        }
        Ok(())
    }

    fn enqueue(&mut self, p: ProcessId, t: SimTime, work: Work<P::Msg>) {
        if !self.alive(p, t) {
            return;
        }
        let slot = &mut self.slots[p.index()];
        slot.inbox.push_back(work);
        if slot.scheduled {
            return;
        }
        if slot.busy_until <= t {
            self.serve(p, t);
        } else {
            let at = slot.busy_until;
            slot.scheduled = true;
            self.push(at, Event::Service(p));
        }
    }

    fn serve(&mut self, p: ProcessId, t: SimTime) {
        let timing = self.config.timing;
        loop {
            if !self.alive(p, t) {
                self.slots[p.index()].inbox.clear();
                return;
            }
            let Some(work) = self.slots[p.index()].inbox.pop_front() else {
                return;
            };
            let (input, cost) = match work {
                Work::Receive { from, msg, arrival } => {
                    self.record(TraceRecord {
                        kind: Some(msg.kind()),
                        counterpart: Some(from),
                        id: msg.message_id(),
                        arrival: Some(arrival),
                        ..TraceRecord::new(t, p, TraceAction::Receive)
                    });
                    (Input::Receive { from, msg }, timing.receive)
                }
                Work::Detect(crashed) => {
                    self.record(TraceRecord {
                        counterpart: Some(crashed),
                        ..TraceRecord::new(t, p, TraceAction::Detect)
                    });
                    (Input::Crash(crashed), SimTime::ZERO)
                }
                Work::App(payload) => (Input::Broadcast(payload), SimTime::ZERO),
            };

            let mut out = std::mem::take(&mut self.out);
            self.slots[p.index()].proto.handle(input, &mut out);
            let mut clock = t + cost;
            let mut sending = true;
            for action in out.drain(..) {
                match action {
                    Action::Send { to, msg } => {
                        let start = clock;
                        clock = clock + timing.send;
                        sending = sending && self.alive(p, clock);
                        if !sending {
                            continue;
                        }
                        let arrival = clock + timing.transmit;
                        self.counts.add(msg.kind());
                        if self.keep(TraceAction::Send) {
                            self.records.push(TraceRecord {
                                kind: Some(msg.kind()),
                                counterpart: Some(to),
                                id: msg.message_id(),
                                arrival: Some(arrival),
                                ..TraceRecord::new(start, p, TraceAction::Send)
                            });
                        }
                        self.push(arrival, Event::Arrival { to, from: p, msg });
                    }
                    Action::Deliver { id, .. } => self.record(TraceRecord {
                        id: Some(id),
                        ..TraceRecord::new(t, p, TraceAction::Deliver)
                    }),
                    Action::Originate { id } => self.record(TraceRecord {
                        id: Some(id),
                        ..TraceRecord::new(t, p, TraceAction::Broadcast)
                    }),
                    Action::Complete { id } => self.record(TraceRecord {
                        id: Some(id),
                        ..TraceRecord::new(t, p, TraceAction::Complete)
                    }),
                    Action::Diagnostic(text) => {
                        log::warn!("{t} {p}: {text}");
                        self.diagnostics.push(Diagnostic {
                            time: t,
                            process: p,
                            text,
                        });
                    }
                }
            }
            self.out = out;

            let slot = &mut self.slots[p.index()];
            slot.busy_until = clock;
            if slot.inbox.is_empty() {
                return;
            }
            if clock > t {
                slot.scheduled = true;
                self.push(clock, Event::Service(p));
                return;
            }
        }
    }

    fn finish(mut self) -> Trace {
        let mut end = self.now;
        let mut unacknowledged = Vec::new();
        for (i, slot) in self.slots.iter().enumerate() {
            let p = ProcessId(i as u32);
            let last = match self.schedule.crash_time(p) {
                Some(c) => slot.busy_until.min(c),
                None => slot.busy_until,
            };
            end = end.max(last);
            if self.schedule.is_correct(p) {
                let waiting = slot.proto.awaiting();
                if !waiting.is_empty() {
                    unacknowledged.push((p, waiting));
                }
            }
        }
        self.records.sort_by_key(|r| r.time);
        Trace {
            n: self.config.n,
            records: self.records,
            counts: self.counts,
            crashes: self.schedule.clone(),
            end_time: end,
            truncated: self.truncated,
            unacknowledged,
            diagnostics: self.diagnostics,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(u: f64) -> SimTime {
        SimTime::from_units(u).unwrap()
    }

    fn one_broadcast(source: u32) -> Vec<AppBroadcast> {
        vec![AppBroadcast::new(SimTime::ZERO, ProcessId(source))]
    }

    fn go(
        n: usize,
        proto: ProtocolName,
        crashes: &[(u32, f64)],
        workload: &[AppBroadcast],
    ) -> Trace {
        let schedule =
            CrashSchedule::from_entries(crashes.iter().map(|&(p, c)| (ProcessId(p), t(c))))
                .unwrap();
        run(
            &SystemConfig::new(n),
            &schedule,
            workload,
            proto,
            RunOptions::default(),
        )
        .unwrap()
    }

    fn times(trace: &Trace, action: TraceAction, p: u32) -> Vec<SimTime> {
        trace
            .records_of(action)
            .filter(|r| r.process == ProcessId(p))
            .map(|r| r.time)
            .collect()
    }

    #[test]
    fn two_process_broadcast_timeline() {
        let tr = go(2, ProtocolName::AtreeB, &[], &one_broadcast(0));
        assert_eq!(times(&tr, TraceAction::Deliver, 0), vec![t(0.0)]);
        assert_eq!(times(&tr, TraceAction::Send, 0), vec![t(0.0)]);
        assert_eq!(times(&tr, TraceAction::Receive, 1), vec![t(0.9)]);
        assert_eq!(times(&tr, TraceAction::Deliver, 1), vec![t(0.9)]);
        assert_eq!(times(&tr, TraceAction::Send, 1), vec![t(1.0)]);
        assert_eq!(times(&tr, TraceAction::Complete, 0), vec![t(1.9)]);
        assert_eq!(tr.end_time, t(2.0));
        assert_eq!(
            tr.counts,
            MessageCounts {
                tree: 1,
                ack: 1,
                nack: 0
            }
        );
        assert!(!tr.truncated);
        assert!(tr.unacknowledged.is_empty());
    }

    #[test]
    fn all_sends_sequentially() {
        let tr = go(8, ProtocolName::AllB, &[], &one_broadcast(0));
        let last = tr
            .records_of(TraceAction::Deliver)
            .map(|r| r.time)
            .max()
            .unwrap();
        assert_eq!(last, t(1.5));
        assert_eq!(tr.counts.total(), 14);
    }

    #[test]
    fn empty_workload_only_has_failure_records() {
        let tr = go(4, ProtocolName::AtreeB, &[(2, 1.0)], &[]);
        assert!(tr
            .records
            .iter()
            .all(|r| matches!(r.action, TraceAction::Crash | TraceAction::Detect)));
        assert_eq!(tr.records_of(TraceAction::Crash).count(), 1);
        assert_eq!(tr.records_of(TraceAction::Detect).count(), 3);
        let tr = go(4, ProtocolName::AtreeB, &[], &[]);
        assert!(tr.records.is_empty());
    }

    #[test]
    fn busy_receiver_queues_fifo() {
        // 1 and 2 both ACK to 0 in the n = 4 tree through 0 -> {1, 2}, 2 -> 3
        let tr = go(4, ProtocolName::AtreeB, &[], &one_broadcast(0));
        let recv: Vec<_> = tr
            .records_of(TraceAction::Receive)
            .filter(|r| r.process == ProcessId(0))
            .map(|r| (r.time, r.arrival.unwrap()))
            .collect();
        for (start, arrival) in recv {
            assert!(start >= arrival);
        }
    }

    #[test]
    fn crashed_sender_stops_mid_sequence() {
        // ALL from 0 crashes at 0.35: sends complete at 0.1, 0.2, 0.3 only
        let tr = go(8, ProtocolName::AllB, &[(0, 0.35)], &one_broadcast(0));
        let to: Vec<_> = tr
            .records_of(TraceAction::Send)
            .filter(|r| r.process == ProcessId(0))
            .map(|r| r.counterpart.unwrap().0)
            .collect();
        assert_eq!(to, vec![1, 2, 3]);
    }

    #[test]
    fn horizon_truncates() {
        let schedule = CrashSchedule::new();
        let opts = RunOptions {
            horizon: Some(t(0.5)),
            ..RunOptions::default()
        };
        let tr = run(
            &SystemConfig::new(8),
            &schedule,
            &one_broadcast(0),
            ProtocolName::AtreeB,
            opts,
        )
        .unwrap();
        assert!(tr.truncated);
        assert!(tr.records_of(TraceAction::Receive).next().is_none());
    }

    #[test]
    fn rejects_bad_config() {
        let schedule = CrashSchedule::new();
        let r = run(
            &SystemConfig::new(6),
            &schedule,
            &[],
            ProtocolName::AtreeB,
            RunOptions::default(),
        );
        assert!(matches!(r, Err(Error::NotPowerOfTwo(6))));
        let r = run(
            &SystemConfig::new(4),
            &schedule,
            &one_broadcast(4),
            ProtocolName::AtreeB,
            RunOptions::default(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn text_export() {
        let tr = go(2, ProtocolName::AtreeB, &[], &one_broadcast(0));
        let text = tr.to_text();
        let first = text.lines().next().unwrap();
        assert_eq!(first, "0.0\t0\tBROADCAST\t-\t-\t0\t1");
        assert!(text.contains("0.9\t1\tRECEIVE\tTREE\t0\t0\t1"));
    }
}
