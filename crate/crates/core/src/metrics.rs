//! Latency, message counts and tree shape extracted from a [`Trace`].

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::protocol::{MessageId, MessageKind};
use crate::sim::{MessageCounts, Trace, TraceAction};
use crate::time::SimTime;
use crate::topology::ProcessId;

/// Time from the start of `id` at its source until the last delivery, checking
/// that every never-crashed process delivered it.
pub fn latency_of(trace: &Trace, id: MessageId) -> Result<SimTime> {
    let start = trace
        .records_of(TraceAction::Broadcast)
        .find(|r| r.id == Some(id))
        .ok_or(Error::UnknownMessage { id })?
        .time;
    let mut got = vec![false; trace.n];
    let mut last = start;
    for r in trace
        .records_of(TraceAction::Deliver)
        .filter(|r| r.id == Some(id))
    {
        got[r.process.index()] = true;
        last = last.max(r.time);
    }
    let missing: Vec<ProcessId> = (0..trace.n as u32)
        .map(ProcessId)
        .filter(|&p| trace.crashes.is_correct(p) && !got[p.index()])
        .collect();
    if !missing.is_empty() {
        return Err(Error::Undelivered { id, missing });
    }
    Ok(last - start)
}

/// Ids of all broadcasts started in the trace, in start order.
pub fn broadcasts(trace: &Trace) -> Vec<MessageId> {
    trace
        .records_of(TraceAction::Broadcast)
        .filter_map(|r| r.id)
        .collect()
}

pub fn message_counts(trace: &Trace) -> MessageCounts {
    trace.counts
}

/// Per process, the ids it delivered, in delivery order.
pub fn deliveries(trace: &Trace) -> Vec<Vec<MessageId>> {
    let mut out = vec![Vec::new(); trace.n];
    for r in trace.records_of(TraceAction::Deliver) {
        if let Some(id) = r.id {
            out[r.process.index()].push(id);
        }
    }
    out
}

/// Distinct `from -> to` pairs over which a TREE message was sent.
/// Needs a full-level trace.
pub fn tree_edges(trace: &Trace) -> BTreeSet<(ProcessId, ProcessId)> {
    trace
        .records_of(TraceAction::Send)
        .filter(|r| r.kind == Some(MessageKind::Tree))
        .filter_map(|r| Some((r.process, r.counterpart?)))
        .collect()
}

/// Shape of a rooted tree given by its edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeShape {
    pub root: ProcessId,
    pub children: BTreeMap<ProcessId, Vec<ProcessId>>,
    /// Longest root-to-leaf path, in edges.
    pub depth: usize,
    pub reached: usize,
}

impl TreeShape {
    /// Fails if some node has two parents or the edges contain a cycle.
    pub fn from_edges(root: ProcessId, edges: &BTreeSet<(ProcessId, ProcessId)>) -> Result<Self> {
        let mut children: BTreeMap<ProcessId, Vec<ProcessId>> = BTreeMap::new();
        let mut parent: BTreeMap<ProcessId, ProcessId> = BTreeMap::new();
        for &(a, b) in edges {
            if let Some(prev) = parent.insert(b, a) {
                return Err(Error::Config(format!(
                    "{b} has two parents, {prev} and {a}"
                )));
            }
            children.entry(a).or_default().push(b);
        }
        if parent.contains_key(&root) {
            return Err(Error::Config(format!("root {root} has a parent")));
        }
        let mut depth = 0;
        let mut reached = 1;
        let mut level = vec![root];
        while !level.is_empty() {
            let next: Vec<_> = level
                .iter()
                .flat_map(|p| children.get(p).into_iter().flatten().copied())
                .collect();
            if next.is_empty() {
                break;
            }
            depth += 1;
            reached += next.len();
            if reached > edges.len() + 1 {
                return Err(Error::Config("edges contain a cycle".into()));
            }
            level = next;
        }
        Ok(TreeShape {
            root,
            children,
            depth,
            reached,
        })
    }

    pub fn out_degree(&self, p: ProcessId) -> usize {
        self.children.get(&p).map_or(0, Vec::len)
    }

    pub fn max_out_degree(&self) -> usize {
        self.children.values().map(Vec::len).max().unwrap_or(0)
    }
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
