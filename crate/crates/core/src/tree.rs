//! Bare TREE propagation along the autonomic spanning tree.
//!
//! The root sends to its FF neighbor in every cluster. A process that
//! receives TREE from `j` forwards only into its clusters below
//! `cluster(me, j)`, so each subcube is entered exactly once. When a crash is
//! detected the process re-sends to the next correct member of the crashed
//! process's cluster, which regrows the lost subtree.
//!
//! The machine carries no payload and no memory of what it sent, so one
//! instance supports a single propagation.

use std::sync::Arc;

use crate::protocol::{Action, Envelope, Input, MessageId, MessageKind, Protocol};
use crate::topology::{cluster_of, ProcessId, Topology, View};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SendAction {
    pub to: ProcessId,
    pub kind: MessageKind,
}

impl SendAction {
    fn tree(to: ProcessId) -> Self {
        SendAction {
            to,
            kind: MessageKind::Tree,
        }
    }
}

/// The payload-free TREE token.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeToken;

impl Envelope for TreeToken {
    fn kind(&self) -> MessageKind {
        MessageKind::Tree
    }

    fn message_id(&self) -> Option<MessageId> {
        None
    }
}

#[derive(Clone, Debug)]
pub struct TreeProcess {
    topo: Arc<Topology>,
    view: View,
}

impl TreeProcess {
    pub fn new(topo: Arc<Topology>, me: ProcessId) -> Self {
        let view = View::all_correct(me, topo.n());
        TreeProcess { topo, view }
    }

    /// Starts from a view that already excludes some processes.
    pub fn with_view(topo: Arc<Topology>, view: View) -> Self {
        TreeProcess { topo, view }
    }

    pub fn me(&self) -> ProcessId {
        self.view.owner()
    }

    pub fn view(&self) -> &View {
        &self.view
    }

    /// Root only: TREE to every FF neighbor, in ascending cluster order.
    pub fn start_tree(&self) -> Vec<SendAction> {
        self.topo
            .neighbors_upto(&self.view, self.topo.dim())
            .into_iter()
            .map(SendAction::tree)
            .collect()
    }

    pub fn on_tree(&mut self, from: ProcessId) -> Vec<SendAction> {
        if !self.view.contains(from) || from == self.me() {
            return Vec::new();
        }
        let s = cluster_of(self.me(), from);
        self.topo
            .neighbors_upto(&self.view, s.get() - 1)
            .into_iter()
            .map(SendAction::tree)
            .collect()
    }

    /// Drops `j` from the view and re-sends to its replacement, if any.
    /// Repeated notifications for the same `j` do nothing.
    pub fn on_crash(&mut self, j: ProcessId) -> Vec<SendAction> {
        if j == self.me() || !self.view.remove(j) {
            return Vec::new();
        }
        let s = cluster_of(self.me(), j);
        self.topo
            .first_correct(&self.view, s)
            .map(SendAction::tree)
            .into_iter()
            .collect()
    }
}

impl Protocol for TreeProcess {
    type Msg = TreeToken;

    fn id(&self) -> ProcessId {
        self.me()
    }

    fn handle(&mut self, input: Input<TreeToken>, out: &mut Vec<Action<TreeToken>>) {
        let sends = match input {
            Input::Broadcast(_) => self.start_tree(),
            Input::Receive { from, .. } => self.on_tree(from),
            Input::Crash(j) => self.on_crash(j),
        };
        out.extend(sends.into_iter().map(|s| Action::Send {
            to: s.to,
            msg: TreeToken,
        }));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn proc(n: usize, me: u32, crashed: &[u32]) -> TreeProcess {
        let topo = Arc::new(Topology::new(n).unwrap());
        let crashed: Vec<_> = crashed.iter().copied().map(ProcessId).collect();
        TreeProcess::with_view(topo, View::with_crashed(ProcessId(me), n, &crashed))
    }

    fn targets(sends: Vec<SendAction>) -> Vec<u32> {
        assert!(sends.iter().all(|s| s.kind == MessageKind::Tree));
        sends.into_iter().map(|s| s.to.0).collect()
    }

    #[test]
    fn start_tree_examples() {
        assert_eq!(targets(proc(8, 0, &[]).start_tree()), vec![1, 2, 4]);
        assert_eq!(targets(proc(8, 0, &[4]).start_tree()), vec![1, 2, 5]);
        assert!(proc(2, 0, &[1]).start_tree().is_empty());
    }

    #[test]
    fn on_tree_examples() {
        assert_eq!(targets(proc(8, 2, &[]).on_tree(ProcessId(0))), vec![3]);
        assert_eq!(targets(proc(8, 4, &[]).on_tree(ProcessId(0))), vec![5, 6]);
        assert!(proc(8, 1, &[]).on_tree(ProcessId(0)).is_empty());
        // sender already known crashed: ignored
        assert!(proc(8, 4, &[0]).on_tree(ProcessId(0)).is_empty());
    }

    #[test]
    fn on_crash_examples() {
        let mut p = proc(8, 0, &[]);
        assert_eq!(targets(p.on_crash(ProcessId(4))), vec![5]);
        assert!(
            p.on_crash(ProcessId(4)).is_empty(),
            "second notice is a no-op"
        );
        assert!(proc(2, 0, &[]).on_crash(ProcessId(1)).is_empty());
        assert!(proc(8, 6, &[]).on_crash(ProcessId(7)).is_empty());
    }
}
