//! Non-autonomic tree baseline (NATREE).
//!
//! A source builds its tree by flooding the first message: each process
//! adopts the first sender as parent, forwards to everybody else and answers
//! later copies with NACK. ACKs flow back as in the tree broadcast, and the
//! senders of ACKs become children. Later messages use only tree edges.
//!
//! Any crash invalidates the tree. If the source has a broadcast in progress
//! it floods again under a new epoch; otherwise the next broadcast floods.
//! A process that learns about a crash while holding pending ACKs for some
//! tree asks that tree's root for a rebuild. Messages from older epochs are
//! NACKed.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::broadcast::Reliability;
use crate::protocol::{Action, Envelope, Input, MessageId, MessageKind, Payload, Protocol};
use crate::topology::{ProcessId, View};

#[derive(Clone, Debug)]
pub enum NatreeMsg {
    Tree {
        root: ProcessId,
        epoch: u32,
        flood: bool,
        id: MessageId,
        payload: Payload,
    },
    Ack {
        root: ProcessId,
        epoch: u32,
        id: MessageId,
    },
    Nack {
        root: ProcessId,
        epoch: u32,
        id: MessageId,
    },
    /// Asks `root` to flood again; sent at most once per epoch.
    Rebuild { root: ProcessId, epoch: u32 },
}

impl Envelope for NatreeMsg {
    fn kind(&self) -> MessageKind {
        match self {
            NatreeMsg::Tree { .. } => MessageKind::Tree,
            NatreeMsg::Ack { .. } => MessageKind::Ack,
            NatreeMsg::Nack { .. } => MessageKind::Nack,
            NatreeMsg::Rebuild { .. } => MessageKind::Rebuild,
        }
    }

    fn message_id(&self) -> Option<MessageId> {
        match self {
            NatreeMsg::Tree { id, .. } | NatreeMsg::Ack { id, .. } | NatreeMsg::Nack { id, .. } => {
                Some(*id)
            }
            NatreeMsg::Rebuild { .. } => None,
        }
    }
}

/// One process's membership in the tree rooted at some source.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TreeState {
    pub epoch: u32,
    /// `None` at the root, or before joining.
    pub parent: Option<ProcessId>,
    pub children: BTreeSet<ProcessId>,
    pub joined: bool,
    /// Root only: a crash happened since the tree was built.
    pub stale: bool,
    rebuild_sent: bool,
}

#[derive(Clone, Debug)]
struct Pending {
    /// `None` for the root's own dissemination.
    parent: Option<ProcessId>,
    waiting: BTreeSet<ProcessId>,
    epoch: u32,
    flood: bool,
}

#[derive(Clone, Debug)]
enum Job {
    Originate(Payload),
    Relay(MessageId, Payload),
}

type Out = Vec<Action<NatreeMsg>>;

#[derive(Clone, Debug)]
pub struct NatreeProcess {
    view: View,
    reliability: Reliability,
    trees: BTreeMap<ProcessId, TreeState>,
    pending: BTreeMap<(ProcessId, MessageId), Pending>,
    last: Vec<Option<(MessageId, Payload)>>,
    jobs: VecDeque<Job>,
    /// Root-side dissemination in progress, with its payload for re-floods.
    current: Option<(MessageId, Payload, bool)>,
    next_ts: u32,
}

impl NatreeProcess {
    pub fn new(n: usize, me: ProcessId, reliability: Reliability) -> Self {
        NatreeProcess {
            view: View::all_correct(me, n),
            reliability,
            trees: BTreeMap::new(),
            pending: BTreeMap::new(),
            last: vec![None; n],
            jobs: VecDeque::new(),
            current: None,
            next_ts: 0,
        }
    }

    pub fn me(&self) -> ProcessId {
        self.view.owner()
    }

    pub fn view(&self) -> &View {
        &self.view
    }

    /// Membership in the tree rooted at `root`, if this process has seen it.
    pub fn tree(&self, root: ProcessId) -> Option<&TreeState> {
        self.trees.get(&root)
    }

    fn everyone_but(&self, skip: Option<ProcessId>) -> BTreeSet<ProcessId> {
        let me = self.me();
        self.view
            .iter()
            .filter(|&p| p != me && Some(p) != skip)
            .collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn send_tree(
        &self,
        to: &BTreeSet<ProcessId>,
        root: ProcessId,
        epoch: u32,
        flood: bool,
        id: MessageId,
        payload: &Payload,
        out: &mut Out,
    ) {
        for &p in to {
            out.push(Action::Send {
                to: p,
                msg: NatreeMsg::Tree {
                    root,
                    epoch,
                    flood,
                    id,
                    payload: payload.clone(),
                },
            });
        }
    }

    // ---- root side ----

    fn start_jobs(&mut self, out: &mut Out) {
        while self.current.is_none() {
            let Some(job) = self.jobs.pop_front() else {
                return;
            };
            let (id, payload, own) = match job {
                Job::Originate(payload) => {
                    self.next_ts += 1;
                    let id = MessageId::new(self.me(), self.next_ts);
                    let me = self.me().index();
                    self.last[me] = Some((id, payload.clone()));
                    out.push(Action::Originate { id });
                    out.push(Action::Deliver {
                        id,
                        payload: payload.clone(),
                    });
                    (id, payload, true)
                }
                Job::Relay(id, payload) => (id, payload, false),
            };
            self.current = Some((id, payload, own));
            let me = self.me();
            let state = self.trees.entry(me).or_default();
            if state.joined && !state.stale {
                let epoch = state.epoch;
                let children: BTreeSet<_> = state
                    .children
                    .iter()
                    .copied()
                    .filter(|&c| self.view.contains(c))
                    .collect();
                let (id, payload, _) = self.current.clone().expect("set above");
                self.send_tree(&children, me, epoch, false, id, &payload, out);
                self.pending.insert(
                    (me, id),
                    Pending {
                        parent: None,
                        waiting: children,
                        epoch,
                        flood: false,
                    },
                );
            } else {
                self.flood(out);
            }
            self.check_root(out);
        }
    }

    /// (Re)builds the own tree with the in-progress message.
    fn flood(&mut self, out: &mut Out) {
        let me = self.me();
        let Some((id, payload, _)) = self.current.clone() else {
            return;
        };
        let state = self.trees.entry(me).or_default();
        state.epoch += 1;
        state.parent = None;
        state.children.clear();
        state.joined = false;
        state.stale = false;
        let epoch = state.epoch;
        let targets = self.everyone_but(None);
        self.send_tree(&targets, me, epoch, true, id, &payload, out);
        self.pending.insert(
            (me, id),
            Pending {
                parent: None,
                waiting: targets,
                epoch,
                flood: true,
            },
        );
    }

    fn check_root(&mut self, out: &mut Out) {
        let me = self.me();
        let Some((id, _, own)) = self.current.clone() else {
            return;
        };
        let Some(p) = self.pending.get(&(me, id)) else {
            return;
        };
        if !p.waiting.is_empty() {
            return;
        }
        let flood = p.flood;
        self.pending.remove(&(me, id));
        if flood {
            let state = self.trees.entry(me).or_default();
            if !state.stale {
                state.joined = true;
            }
        }
        self.current = None;
        if own {
            out.push(Action::Complete { id });
        }
    }

    // ---- handlers ----

    fn do_broadcast(&mut self, payload: Payload, out: &mut Out) {
        self.jobs.push_back(Job::Originate(payload));
        self.start_jobs(out);
    }

    #[allow(clippy::too_many_arguments)]
    fn do_tree(
        &mut self,
        from: ProcessId,
        root: ProcessId,
        epoch: u32,
        flood: bool,
        id: MessageId,
        payload: Payload,
        out: &mut Out,
    ) {
        let source_ok = self.view.contains(id.source);
        let accept = match self.reliability {
            Reliability::BestEffort => source_ok && self.view.contains(from),
            Reliability::Reliable => self.view.contains(from),
        };
        if !accept {
            return;
        }
        let nack = NatreeMsg::Nack { root, epoch, id };
        if root == self.me() {
            out.push(Action::Send {
                to: from,
                msg: nack,
            });
            return;
        }

        let state = self.trees.entry(root).or_default();
        if epoch < state.epoch {
            out.push(Action::Send {
                to: from,
                msg: nack,
            });
            return;
        }
        if epoch > state.epoch {
            *state = TreeState {
                epoch,
                ..TreeState::default()
            };
            self.pending.retain(|(r, _), _| *r != root);
        }
        let state = self.trees.get_mut(&root).expect("inserted above");
        if flood {
            if state.joined {
                out.push(Action::Send {
                    to: from,
                    msg: nack,
                });
                return;
            }
            state.joined = true;
            state.parent = Some(from);
        } else if !state.joined {
            out.push(Action::Send {
                to: from,
                msg: nack,
            });
            return;
        }

        let relay = self.accept_payload(id, &payload, out)
            && self.reliability == Reliability::Reliable
            && !source_ok;
        if relay {
            self.jobs.push_back(Job::Relay(id, payload.clone()));
        }

        let targets = if flood {
            self.everyone_but(Some(from))
        } else {
            let state = &self.trees[&root];
            state
                .children
                .iter()
                .copied()
                .filter(|&c| self.view.contains(c))
                .collect()
        };
        self.send_tree(&targets, root, epoch, flood, id, &payload, out);
        self.pending.insert(
            (root, id),
            Pending {
                parent: Some(from),
                waiting: targets,
                epoch,
                flood,
            },
        );
        self.check_pending(root, id, out);
        if relay {
            self.start_jobs(out);
        }
    }

    /// Delivers a fresh message. Returns whether it was fresh.
    fn accept_payload(&mut self, id: MessageId, payload: &Payload, out: &mut Out) -> bool {
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
        }
        fresh
    }

    fn check_pending(&mut self, root: ProcessId, id: MessageId, out: &mut Out) {
        if root == self.me() {
            self.check_root(out);
            self.start_jobs(out);
            return;
        }
        let Some(p) = self.pending.get(&(root, id)) else {
            return;
        };
        if !p.waiting.is_empty() {
            return;
        }
        let p = self.pending.remove(&(root, id)).expect("present");
        let Some(parent) = p.parent else {
            return;
        };
        let source_ok = match self.reliability {
            Reliability::BestEffort => self.view.contains(id.source),
            Reliability::Reliable => true,
        };
        if source_ok && self.view.contains(parent) {
            out.push(Action::Send {
                to: parent,
                msg: NatreeMsg::Ack {
                    root,
                    epoch: p.epoch,
                    id,
                },
            });
        }
    }

    fn do_reply(
        &mut self,
        from: ProcessId,
        root: ProcessId,
        epoch: u32,
        id: MessageId,
        ack: bool,
        out: &mut Out,
    ) {
        let Some(p) = self.pending.get_mut(&(root, id)) else {
            return;
        };
        if p.epoch != epoch || !p.waiting.remove(&from) {
            return;
        }
        if ack && p.flood {
            self.trees.entry(root).or_default().children.insert(from);
        }
        self.check_pending(root, id, out);
    }

    fn do_rebuild(&mut self, epoch: u32, out: &mut Out) {
        let me = self.me();
        let state = self.trees.entry(me).or_default();
        if epoch != state.epoch {
            return;
        }
        state.stale = true;
        if self.current.is_some() {
            self.flood(out);
            self.check_root(out);
            self.start_jobs(out);
        }
    }

    fn do_crash(&mut self, j: ProcessId, out: &mut Out) {
        if j == self.me() || !self.view.remove(j) {
            return;
        }
        let me = self.me();
        for state in self.trees.values_mut() {
            state.children.remove(&j);
        }
        if let Some(state) = self.trees.get_mut(&me) {
            state.stale = true;
        }

        let keys: Vec<_> = self.pending.keys().copied().collect();
        let mut rebuild = BTreeSet::new();
        for (root, id) in keys {
            if root == me {
                continue;
            }
            let p = &self.pending[&(root, id)];
            let drop = p.parent == Some(j)
                || root == j
                || (self.reliability == Reliability::BestEffort && id.source == j);
            if drop {
                self.pending.remove(&(root, id));
                continue;
            }
            rebuild.insert(root);
            let p = self.pending.get_mut(&(root, id)).expect("present");
            if p.waiting.remove(&j) {
                self.check_pending(root, id, out);
            }
        }
        for root in rebuild {
            let state = self.trees.entry(root).or_default();
            if !state.rebuild_sent {
                state.rebuild_sent = true;
                out.push(Action::Send {
                    to: root,
                    msg: NatreeMsg::Rebuild {
                        root,
                        epoch: state.epoch,
                    },
                });
            }
        }

        if self.current.is_some() {
            self.flood(out);
            self.check_root(out);
        }
        if self.reliability == Reliability::Reliable {
            if let Some((id, payload)) = self.last[j.index()].clone() {
                self.jobs.push_back(Job::Relay(id, payload));
            }
        }
        self.start_jobs(out);
    }
}

impl Protocol for NatreeProcess {
    type Msg = NatreeMsg;

    fn id(&self) -> ProcessId {
        self.me()
    }

    fn handle(&mut self, input: Input<NatreeMsg>, out: &mut Out) {
        match input {
            Input::Broadcast(payload) => self.do_broadcast(payload, out),
            Input::Crash(j) => self.do_crash(j, out),
            Input::Receive { from, msg } => match msg {
                NatreeMsg::Tree {
                    root,
                    epoch,
                    flood,
                    id,
                    payload,
                } => self.do_tree(from, root, epoch, flood, id, payload, out),
                NatreeMsg::Ack { root, epoch, id } => {
                    self.do_reply(from, root, epoch, id, true, out)
                }
                NatreeMsg::Nack { root, epoch, id } => {
                    self.do_reply(from, root, epoch, id, false, out)
                }
                NatreeMsg::Rebuild { root, epoch } if root == self.me() => {
                    self.do_rebuild(epoch, out)
                }
                NatreeMsg::Rebuild { .. } => {}
            },
        }
    }

    fn awaiting(&self) -> Vec<ProcessId> {
        self.pending
            .values()
            .flat_map(|p| p.waiting.iter().copied())
            .collect()
    }
}
