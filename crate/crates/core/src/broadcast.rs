//! Hierarchical best-effort (ATREE-B) and reliable (ATREE-R) broadcast.
//!
//! Messages travel along the autonomic spanning tree and acknowledgements
//! flow back up it. Each forwarded copy is tracked in the ack set as a tuple
//! `<from, to, msg>`, where `from = None` marks copies this process
//! originated itself. A process acknowledges its parent once every copy it
//! forwarded for that parent has been acknowledged or written off by a crash.
//!
//! The same machine also runs the one-to-all baseline: with
//! [`Dissemination::All`] the source sends directly to every correct process
//! and nobody forwards.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use crate::protocol::{Action, Envelope, Input, MessageId, MessageKind, Payload, Protocol};
use crate::topology::{cluster_of, ProcessId, Topology, View};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reliability {
    /// Delivery guaranteed only while the source stays correct.
    BestEffort,
    /// Receivers relay messages whose source crashed.
    Reliable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dissemination {
    /// VCube spanning tree.
    Tree,
    /// Source sends to every correct process, in ascending id order.
    All,
}

#[derive(Clone, Debug)]
pub enum BroadcastMsg {
    Tree { id: MessageId, payload: Payload },
    Ack { id: MessageId },
}

impl Envelope for BroadcastMsg {
    fn kind(&self) -> MessageKind {
        match self {
            BroadcastMsg::Tree { .. } => MessageKind::Tree,
            BroadcastMsg::Ack { .. } => MessageKind::Ack,
        }
    }

    fn message_id(&self) -> Option<MessageId> {
        match self {
            BroadcastMsg::Tree { id, .. } | BroadcastMsg::Ack { id } => Some(*id),
        }
    }
}

/// A pending acknowledgement: `msg` was forwarded to `to` on behalf of `from`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AckEntry {
    pub from: Option<ProcessId>,
    pub to: ProcessId,
    pub msg: MessageId,
}

/// Set of pending acknowledgements with the two lookups the protocol needs:
/// by destination (an ACK arrives from `to`) and by origin (`<j, *, m>`).
#[derive(Clone, Debug, Default)]
pub struct AckSet {
    by_dest: BTreeMap<(MessageId, ProcessId), Vec<Option<ProcessId>>>,
    by_origin: BTreeMap<(MessageId, Option<ProcessId>), usize>,
    per_msg: BTreeMap<MessageId, usize>,
    len: usize,
}

impl AckSet {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, e: &AckEntry) -> bool {
        self.by_dest
            .get(&(e.msg, e.to))
            .is_some_and(|froms| froms.contains(&e.from))
    }

    /// Adds `e`; returns `false` if it was already present.
    pub fn insert(&mut self, e: AckEntry) -> bool {
        let froms = self.by_dest.entry((e.msg, e.to)).or_default();
        if froms.contains(&e.from) {
            return false;
        }
        froms.push(e.from);
        *self.by_origin.entry((e.msg, e.from)).or_default() += 1;
        *self.per_msg.entry(e.msg).or_default() += 1;
        self.len += 1;
        true
    }

    pub fn remove(&mut self, e: &AckEntry) -> bool {
        let Some(froms) = self.by_dest.get_mut(&(e.msg, e.to)) else {
            return false;
        };
        let Some(pos) = froms.iter().position(|f| *f == e.from) else {
            return false;
        };
        froms.remove(pos);
        if froms.is_empty() {
            self.by_dest.remove(&(e.msg, e.to));
        }
        self.forget(e.msg, e.from);
        true
    }

    /// Removes the oldest entry `<x, to, msg>` and returns its `x`.
    pub fn take(&mut self, to: ProcessId, msg: MessageId) -> Option<Option<ProcessId>> {
        let froms = self.by_dest.get_mut(&(msg, to))?;
        let from = froms.remove(0);
        if froms.is_empty() {
            self.by_dest.remove(&(msg, to));
        }
        self.forget(msg, from);
        Some(from)
    }

    fn forget(&mut self, msg: MessageId, from: Option<ProcessId>) {
        dec(&mut self.by_origin, (msg, from));
        dec(&mut self.per_msg, msg);
        self.len -= 1;
    }

    /// Whether any `<from, *, msg>` is still pending.
    pub fn has_origin(&self, from: Option<ProcessId>, msg: MessageId) -> bool {
        self.by_origin.contains_key(&(msg, from))
    }

    pub fn has_msg(&self, msg: MessageId) -> bool {
        self.per_msg.contains_key(&msg)
    }

    /// All entries, ordered by message, then destination, then insertion.
    pub fn entries(&self) -> Vec<AckEntry> {
        self.by_dest
            .iter()
            .flat_map(|(&(msg, to), froms)| {
                froms.iter().map(move |&from| AckEntry { from, to, msg })
            })
            .collect()
    }
}

fn dec<K: Ord>(map: &mut BTreeMap<K, usize>, key: K) {
    if let Some(c) = map.get_mut(&key) {
        *c -= 1;
        if *c == 0 {
            map.remove(&key);
        }
    }
}

type Out = Vec<Action<BroadcastMsg>>;

/// Per-process state of the tree (or one-to-all) broadcast.
#[derive(Clone, Debug)]
pub struct BroadcastProcess {
    topo: Arc<Topology>,
    view: View,
    reliability: Reliability,
    dissemination: Dissemination,
    last: Vec<Option<(MessageId, Payload)>>,
    ack_set: AckSet,
    /// Payloads of messages that still have pending entries, for retransmission.
    payloads: BTreeMap<MessageId, Payload>,
    pending_app: VecDeque<Payload>,
    in_flight: Option<MessageId>,
    next_ts: u32,
}

impl BroadcastProcess {
    pub fn new(
        topo: Arc<Topology>,
        me: ProcessId,
        reliability: Reliability,
        dissemination: Dissemination,
    ) -> Self {
        let view = View::all_correct(me, topo.n());
        Self::with_view(topo, view, reliability, dissemination)
    }

    pub fn with_view(
        topo: Arc<Topology>,
        view: View,
        reliability: Reliability,
        dissemination: Dissemination,
    ) -> Self {
        let n = topo.n();
        BroadcastProcess {
            topo,
            view,
            reliability,
            dissemination,
            last: vec![None; n],
            ack_set: AckSet::default(),
            payloads: BTreeMap::new(),
            pending_app: VecDeque::new(),
            in_flight: None,
            next_ts: 0,
        }
    }

    pub fn me(&self) -> ProcessId {
        self.view.owner()
    }

    pub fn view(&self) -> &View {
        &self.view
    }

    pub fn ack_set(&self) -> &AckSet {
        &self.ack_set
    }

    /// Last message received (or sent) from `source`.
    pub fn last(&self, source: ProcessId) -> Option<MessageId> {
        self.last.get(source.index())?.as_ref().map(|(id, _)| *id)
    }

    /// Own broadcast still waiting for acknowledgements.
    pub fn in_flight(&self) -> Option<MessageId> {
        self.in_flight
    }

    /// Application payloads queued behind the in-flight broadcast.
    pub fn queued(&self) -> usize {
        self.pending_app.len()
    }

    pub fn broadcast(&mut self, payload: Payload) -> Out {
        let mut out = Vec::new();
        self.do_broadcast(payload, &mut out);
        out
    }

    pub fn on_tree(&mut self, from: ProcessId, id: MessageId, payload: Payload) -> Out {
        let mut out = Vec::new();
        self.do_tree(from, id, payload, &mut out);
        out
    }

    pub fn on_ack(&mut self, from: ProcessId, id: MessageId) -> Out {
        let mut out = Vec::new();
        self.do_ack(from, id, &mut out);
        out
    }

    pub fn on_crash(&mut self, j: ProcessId) -> Out {
        let mut out = Vec::new();
        self.do_crash(j, &mut out);
        out
    }

    /// Sends ACK to `j` once nothing forwarded on its behalf is pending.
    /// For `j = None` this checks whether the own broadcast `id` completed.
    pub fn check_acks(&mut self, j: Option<ProcessId>, id: MessageId) -> Out {
        let mut out = Vec::new();
        self.do_check_acks(j, id, &mut out);
        out
    }

    /// Re-broadcast of another source's message over this process's own tree.
    /// Skips the completion gate and local delivery.
    pub fn relay(&mut self, id: MessageId, payload: Payload) -> Out {
        let mut out = Vec::new();
        self.do_relay(id, payload, &mut out);
        out
    }

    fn initial_targets(&self) -> Vec<ProcessId> {
        match self.dissemination {
            Dissemination::Tree => self.topo.neighbors_upto(&self.view, self.topo.dim()),
            Dissemination::All => {
                let me = self.me();
                self.view.iter().filter(|&p| p != me).collect()
            }
        }
    }

    fn forward_targets(&self, from: ProcessId) -> Vec<ProcessId> {
        match self.dissemination {
            Dissemination::Tree if from != self.me() => {
                let s = cluster_of(self.me(), from);
                self.topo.neighbors_upto(&self.view, s.get() - 1)
            }
            _ => Vec::new(),
        }
    }

    fn replacement(&self, crashed: ProcessId) -> Option<ProcessId> {
        match self.dissemination {
            Dissemination::Tree => self
                .topo
                .first_correct(&self.view, cluster_of(self.me(), crashed)),
            Dissemination::All => None,
        }
    }

    fn send_tree(&mut self, entry: AckEntry, payload: &Payload, out: &mut Out) -> bool {
        if !self.ack_set.insert(entry) {
            return false;
        }
        self.payloads
            .entry(entry.msg)
            .or_insert_with(|| payload.clone());
        out.push(Action::Send {
            to: entry.to,
            msg: BroadcastMsg::Tree {
                id: entry.msg,
                payload: payload.clone(),
            },
        });
        true
    }

    fn gc(&mut self, id: MessageId) {
        if !self.ack_set.has_msg(id) {
            self.payloads.remove(&id);
        }
    }

    fn do_broadcast(&mut self, payload: Payload, out: &mut Out) {
        self.pending_app.push_back(payload);
        self.dispatch(out);
    }

    /// Starts queued broadcasts while the previous one is complete.
    fn dispatch(&mut self, out: &mut Out) {
        while self.in_flight.is_none() {
            let Some(payload) = self.pending_app.pop_front() else {
                return;
            };
            self.next_ts += 1;
            let id = MessageId::new(self.me(), self.next_ts);
            let me = self.me().index();
            self.last[me] = Some((id, payload.clone()));
            out.push(Action::Originate { id });
            out.push(Action::Deliver {
                id,
                payload: payload.clone(),
            });
            self.in_flight = Some(id);
            for to in self.initial_targets() {
                self.send_tree(
                    AckEntry {
                        from: None,
                        to,
                        msg: id,
                    },
                    &payload,
                    out,
                );
            }
            if !self.ack_set.has_origin(None, id) {
                self.in_flight = None;
                out.push(Action::Complete { id });
            }
        }
    }

    fn do_relay(&mut self, id: MessageId, payload: Payload, out: &mut Out) {
        for to in self.initial_targets() {
            self.send_tree(
                AckEntry {
                    from: None,
                    to,
                    msg: id,
                },
                &payload,
                out,
            );
        }
    }

    fn do_tree(&mut self, from: ProcessId, id: MessageId, payload: Payload, out: &mut Out) {
        let source_ok = self.view.contains(id.source);
        let accept = match self.reliability {
            Reliability::BestEffort => source_ok && self.view.contains(from),
            Reliability::Reliable => self.view.contains(from),
        };
        if !accept {
            return;
        }

        let slot = &mut self.last[id.source.index()];
        let fresh = match slot {
            None => true,
            Some((prev, _)) if id.ts == prev.ts + 1 => true,
            Some((prev, _)) => {
                if id.ts > prev.ts + 1 {
                    out.push(Action::Diagnostic(format!(
                        "timestamp gap from {}: got {}, last {}",
                        id.source, id.ts, prev.ts
                    )));
                }
                false
            }
        };
        if fresh {
            *slot = Some((id, payload.clone()));
            out.push(Action::Deliver {
                id,
                payload: payload.clone(),
            });
            if self.reliability == Reliability::Reliable && !source_ok {
                self.do_relay(id, payload, out);
                self.do_check_acks(Some(from), id, out);
                return;
            }
        }

        for to in self.forward_targets(from) {
            self.send_tree(
                AckEntry {
                    from: Some(from),
                    to,
                    msg: id,
                },
                &payload,
                out,
            );
        }
        self.do_check_acks(Some(from), id, out);
    }

    fn do_check_acks(&mut self, j: Option<ProcessId>, id: MessageId, out: &mut Out) {
        if self.ack_set.has_origin(j, id) {
            return;
        }
        self.gc(id);
        match j {
            Some(j) => {
                let source_ok = match self.reliability {
                    Reliability::BestEffort => self.view.contains(id.source),
                    Reliability::Reliable => true,
                };
                if source_ok && self.view.contains(j) {
                    out.push(Action::Send {
                        to: j,
                        msg: BroadcastMsg::Ack { id },
                    });
                }
            }
            None => {
                if self.in_flight == Some(id) {
                    self.in_flight = None;
                    out.push(Action::Complete { id });
                    self.dispatch(out);
                }
            }
        }
    }

    fn do_ack(&mut self, from: ProcessId, id: MessageId, out: &mut Out) {
        match self.ack_set.take(from, id) {
            Some(origin) => self.do_check_acks(origin, id, out),
            None => log::debug!(
                "{}: ignoring ACK({id}) from {from} with no pending entry",
                self.me()
            ),
        }
    }

    fn do_crash(&mut self, j: ProcessId, out: &mut Out) {
        if j == self.me() || !self.view.remove(j) {
            return;
        }
        for e in self.ack_set.entries() {
            if !self.ack_set.contains(&e) {
                continue;
            }
            let origin_ok = e.from.is_none_or(|p| self.view.contains(p));
            let keep = match self.reliability {
                Reliability::BestEffort => origin_ok && self.view.contains(e.msg.source),
                Reliability::Reliable => origin_ok,
            };
            if !keep {
                self.ack_set.remove(&e);
                self.gc(e.msg);
                continue;
            }
            if e.to == j {
                if let Some(k) = self.replacement(j) {
                    if let Some(payload) = self.payloads.get(&e.msg).cloned() {
                        self.send_tree(
                            AckEntry {
                                from: e.from,
                                to: k,
                                msg: e.msg,
                            },
                            &payload,
                            out,
                        );
                    }
                }
                self.ack_set.remove(&e);
                self.do_check_acks(e.from, e.msg, out);
            }
        }
        if self.reliability == Reliability::Reliable {
            if let Some((id, payload)) = self.last[j.index()].clone() {
                self.do_relay(id, payload, out);
            }
        }
    }
}

impl Protocol for BroadcastProcess {
    type Msg = BroadcastMsg;

    fn id(&self) -> ProcessId {
        self.me()
    }

    fn handle(&mut self, input: Input<BroadcastMsg>, out: &mut Out) {
        match input {
            Input::Broadcast(payload) => self.do_broadcast(payload, out),
            Input::Receive {
                from,
                msg: BroadcastMsg::Tree { id, payload },
            } => self.do_tree(from, id, payload, out),
            Input::Receive {
                from,
                msg: BroadcastMsg::Ack { id },
            } => self.do_ack(from, id, out),
            Input::Crash(j) => self.do_crash(j, out),
        }
    }

    fn awaiting(&self) -> Vec<ProcessId> {
        self.ack_set.entries().into_iter().map(|e| e.to).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(i: u32) -> ProcessId {
        ProcessId(i)
    }

    fn m(src: u32, ts: u32) -> MessageId {
        MessageId::new(p(src), ts)
    }

    fn payload() -> Payload {
        Arc::from(&b"x"[..])
    }

    fn proc(n: usize, me: u32, rel: Reliability) -> BroadcastProcess {
        let topo = Arc::new(Topology::new(n).unwrap());
        BroadcastProcess::new(topo, p(me), rel, Dissemination::Tree)
    }

    fn sends(out: &Out) -> Vec<(u32, MessageKind)> {
        out.iter()
            .filter_map(|a| match a {
                Action::Send { to, msg } => Some((to.0, msg.kind())),
                _ => None,
            })
            .collect()
    }

    fn trees(out: &Out) -> Vec<u32> {
        sends(out)
            .into_iter()
            .filter(|(_, k)| *k == MessageKind::Tree)
            .map(|(t, _)| t)
            .collect()
    }

    fn acks(out: &Out) -> Vec<u32> {
        sends(out)
            .into_iter()
            .filter(|(_, k)| *k == MessageKind::Ack)
            .map(|(t, _)| t)
            .collect()
    }

    fn delivered(out: &Out) -> Vec<MessageId> {
        out.iter()
            .filter_map(|a| match a {
                Action::Deliver { id, .. } => Some(*id),
                _ => None,
            })
            .collect()
    }

    fn completed(out: &Out) -> Vec<MessageId> {
        out.iter()
            .filter_map(|a| match a {
                Action::Complete { id } => Some(*id),
                _ => None,
            })
            .collect()
    }

    fn entry(from: Option<u32>, to: u32, msg: MessageId) -> AckEntry {
        AckEntry {
            from: from.map(p),
            to: p(to),
            msg,
        }
    }

    #[test]
    fn first_broadcast_sends_to_neighborhood() {
        let mut s = proc(8, 0, Reliability::BestEffort);
        let out = s.broadcast(payload());
        assert_eq!(delivered(&out), vec![m(0, 1)]);
        assert_eq!(trees(&out), vec![1, 2, 4]);
        let mut pending = s.ack_set().entries();
        pending.sort();
        assert_eq!(
            pending,
            vec![
                entry(None, 1, m(0, 1)),
                entry(None, 2, m(0, 1)),
                entry(None, 4, m(0, 1))
            ]
        );
        assert_eq!(s.in_flight(), Some(m(0, 1)));
    }

    #[test]
    fn broadcast_with_no_correct_peer_completes_at_once() {
        let mut s = proc(2, 0, Reliability::BestEffort);
        s.on_crash(p(1));
        let out = s.broadcast(payload());
        assert_eq!(delivered(&out), vec![m(0, 1)]);
        assert!(trees(&out).is_empty());
        assert_eq!(completed(&out), vec![m(0, 1)]);
        assert_eq!(s.in_flight(), None);
    }

    #[test]
    fn second_broadcast_waits_for_first() {
        let mut s = proc(2, 0, Reliability::BestEffort);
        s.broadcast(payload());
        let out = s.broadcast(payload());
        assert!(out.is_empty());
        assert_eq!(s.queued(), 1);
        let out = s.on_ack(p(1), m(0, 1));
        assert_eq!(completed(&out), vec![m(0, 1)]);
        assert_eq!(delivered(&out), vec![m(0, 2)]);
        assert_eq!(trees(&out), vec![1]);
        assert_eq!(s.in_flight(), Some(m(0, 2)));
    }

    #[test]
    fn leaf_delivers_and_acks() {
        let mut s = proc(8, 1, Reliability::BestEffort);
        let out = s.on_tree(p(0), m(0, 1), payload());
        assert_eq!(delivered(&out), vec![m(0, 1)]);
        assert!(trees(&out).is_empty());
        assert_eq!(acks(&out), vec![0]);
    }

    #[test]
    fn inner_node_forwards_before_acking() {
        let mut s = proc(8, 4, Reliability::BestEffort);
        let out = s.on_tree(p(0), m(0, 1), payload());
        assert_eq!(delivered(&out), vec![m(0, 1)]);
        assert_eq!(trees(&out), vec![5, 6]);
        assert!(acks(&out).is_empty());

        let out = s.on_ack(p(5), m(0, 1));
        assert!(out.is_empty());
        assert_eq!(s.ack_set().entries(), vec![entry(Some(0), 6, m(0, 1))]);
        let out = s.on_ack(p(6), m(0, 1));
        assert_eq!(acks(&out), vec![0]);
        assert!(s.ack_set().is_empty());
    }

    #[test]
    fn duplicate_tree_is_not_redelivered_but_acked() {
        let mut s = proc(8, 3, Reliability::BestEffort);
        s.on_tree(p(2), m(0, 1), payload());
        let out = s.on_tree(p(2), m(0, 1), payload());
        assert!(delivered(&out).is_empty());
        assert_eq!(acks(&out), vec![2]);
    }

    #[test]
    fn tree_from_crashed_sender_or_source_is_dropped() {
        let mut s = proc(8, 3, Reliability::BestEffort);
        s.on_crash(p(2));
        assert!(s.on_tree(p(2), m(0, 1), payload()).is_empty());
        let mut s = proc(8, 3, Reliability::BestEffort);
        s.on_crash(p(0));
        assert!(s.on_tree(p(2), m(0, 1), payload()).is_empty());
    }

    #[test]
    fn check_acks_examples() {
        let mut s = proc(8, 4, Reliability::BestEffort);
        s.on_tree(p(0), m(0, 1), payload());
        // <0,5,m> and <0,6,m> pending
        assert!(s.check_acks(Some(p(0)), m(0, 1)).is_empty());
        s.on_ack(p(5), m(0, 1));
        s.on_ack(p(6), m(0, 1));
        assert_eq!(acks(&s.check_acks(Some(p(0)), m(0, 1))), vec![0]);
    }

    #[test]
    fn unmatched_ack_is_ignored() {
        let mut s = proc(8, 4, Reliability::BestEffort);
        assert!(s.on_ack(p(5), m(0, 1)).is_empty());
    }

    #[test]
    fn crash_of_pending_child_reroutes() {
        let mut s = proc(8, 0, Reliability::BestEffort);
        s.broadcast(payload());
        let out = s.on_crash(p(4));
        assert_eq!(trees(&out), vec![5]);
        assert!(s.ack_set().contains(&entry(None, 5, m(0, 1))));
        assert!(!s.ack_set().contains(&entry(None, 4, m(0, 1))));
    }

    #[test]
    fn crash_of_source_drops_its_entries() {
        let mut s = proc(8, 2, Reliability::BestEffort);
        s.on_tree(p(0), m(0, 1), payload());
        assert!(s.ack_set().contains(&entry(Some(0), 3, m(0, 1))));
        let out = s.on_crash(p(0));
        assert!(out.is_empty());
        assert!(s.ack_set().is_empty());
    }

    #[test]
    fn crash_with_empty_cluster_acks_upstream() {
        let mut s = proc(8, 6, Reliability::BestEffort);
        s.on_tree(p(4), m(0, 1), payload());
        assert_eq!(s.ack_set().entries(), vec![entry(Some(4), 7, m(0, 1))]);
        let out = s.on_crash(p(7));
        assert!(trees(&out).is_empty());
        assert_eq!(acks(&out), vec![4]);
        assert!(s.ack_set().is_empty());
    }

    #[test]
    fn crash_notification_is_idempotent() {
        let mut s = proc(8, 0, Reliability::BestEffort);
        s.broadcast(payload());
        assert_eq!(trees(&s.on_crash(p(4))), vec![5]);
        assert!(s.on_crash(p(4)).is_empty());
    }

    #[test]
    fn reliable_relays_on_source_crash() {
        let mut s = proc(8, 2, Reliability::Reliable);
        s.on_tree(p(0), m(0, 1), payload());
        s.on_ack(p(3), m(0, 1));
        let out = s.on_crash(p(0));
        // neighborhood of 2 without 0: clusters [3], [0,1] -> 1, [6,7,4,5] -> 6
        assert_eq!(trees(&out), vec![3, 1, 6]);
        assert!(delivered(&out).is_empty());
    }

    #[test]
    fn reliable_relay_of_fresh_message_from_dead_source() {
        let mut s = proc(8, 2, Reliability::Reliable);
        s.on_crash(p(0));
        let out = s.on_tree(p(1), m(0, 1), payload());
        assert_eq!(delivered(&out), vec![m(0, 1)]);
        assert_eq!(trees(&out), vec![3, 1, 6]);
        // the sender's copy is settled right away
        assert_eq!(acks(&out), vec![1]);

        // a duplicate is neither delivered nor relayed again
        let out = s.on_tree(p(3), m(0, 1), payload());
        assert!(delivered(&out).is_empty());
        assert_eq!(acks(&out), vec![3]);
    }

    #[test]
    fn reliable_relay_does_not_touch_own_gate() {
        let mut s = proc(8, 2, Reliability::Reliable);
        s.broadcast(payload());
        assert_eq!(s.in_flight(), Some(m(2, 1)));
        s.on_crash(p(0));
        let out = s.on_tree(p(1), m(0, 1), payload());
        assert!(!trees(&out).is_empty());
        assert_eq!(s.in_flight(), Some(m(2, 1)));
    }

    #[test]
    fn reliable_crash_without_last_does_not_relay() {
        let mut s = proc(8, 2, Reliability::Reliable);
        assert!(s.on_crash(p(5)).is_empty());
    }

    #[test]
    fn all_dissemination_targets_everyone() {
        let topo = Arc::new(Topology::new(8).unwrap());
        let mut s = BroadcastProcess::new(
            topo.clone(),
            p(0),
            Reliability::BestEffort,
            Dissemination::All,
        );
        assert_eq!(trees(&s.broadcast(payload())), vec![1, 2, 3, 4, 5, 6, 7]);
        assert!(trees(&s.on_crash(p(3))).is_empty());

        let view = View::with_crashed(p(0), 8, &[p(5)]);
        let mut s = BroadcastProcess::with_view(
            topo.clone(),
            view,
            Reliability::BestEffort,
            Dissemination::All,
        );
        assert_eq!(trees(&s.broadcast(payload())).len(), 6);

        let mut r = BroadcastProcess::new(topo, p(4), Reliability::BestEffort, Dissemination::All);
        let out = r.on_tree(p(0), m(0, 1), payload());
        assert!(trees(&out).is_empty());
        assert_eq!(acks(&out), vec![0]);
    }

    #[test]
    fn timestamp_gap_is_reported() {
        let mut s = proc(8, 1, Reliability::BestEffort);
        s.on_tree(p(0), m(0, 1), payload());
        let out = s.on_tree(p(0), m(0, 3), payload());
        assert!(out.iter().any(|a| matches!(a, Action::Diagnostic(_))));
        assert!(delivered(&out).is_empty());
    }

    #[test]
    fn ack_set_lookups() {
        let mut a = AckSet::default();
        let e1 = entry(Some(0), 5, m(0, 1));
        let e2 = entry(Some(2), 5, m(0, 1));
        assert!(a.insert(e1));
        assert!(!a.insert(e1));
        assert!(a.insert(e2));
        assert!(a.has_origin(Some(p(0)), m(0, 1)));
        assert_eq!(a.take(p(5), m(0, 1)), Some(Some(p(0))));
        assert!(!a.has_origin(Some(p(0)), m(0, 1)));
        assert!(a.has_msg(m(0, 1)));
        assert!(a.remove(&e2));
        assert!(a.is_empty());
        assert!(!a.has_msg(m(0, 1)));
        assert_eq!(a.take(p(5), m(0, 1)), None);
    }
}
