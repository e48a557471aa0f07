//! VCube hierarchical clusters and view-dependent neighbor selection.
//!
//! Process `i` sees the rest of the system as `d = log2 n` clusters. Cluster
//! `s` holds `2^(s-1)` processes in a fixed search order; the first member of
//! that order which the local [`View`] still considers correct is the
//! process `i` talks to at level `s`.
//!
//! The cluster lists are translation invariant under xor, `C(i, s)[k] = i ^
//! C(0, s)[k]`, so a [`Topology`] only keeps one offset table per level.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identity of a process, a `d`-bit address in `0..n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcessId(pub u32);

impl ProcessId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for ProcessId {
    fn from(v: u32) -> Self {
        ProcessId(v)
    }
}

/// Cluster level `s` in `1..=d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClusterIndex(u32);

impl ClusterIndex {
    pub fn get(self) -> u32 {
        self.0
    }

    /// Number of processes in a cluster at this level.
    pub fn size(self) -> usize {
        1 << (self.0 - 1)
    }
}

impl fmt::Display for ClusterIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The set of processes one owner currently believes correct.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct View {
    owner: ProcessId,
    correct: Vec<bool>,
    live: usize,
}

impl View {
    /// A view in which every process of an `n`-process system is correct.
    pub fn all_correct(owner: ProcessId, n: usize) -> Self {
        View {
            owner,
            correct: vec![true; n],
            live: n,
        }
    }

    /// A view with the given processes already known to be crashed.
    pub fn with_crashed(owner: ProcessId, n: usize, crashed: &[ProcessId]) -> Self {
        let mut view = View::all_correct(owner, n);
        for &p in crashed {
            view.remove(p);
        }
        view
    }

    pub fn owner(&self) -> ProcessId {
        self.owner
    }

    pub fn n(&self) -> usize {
        self.correct.len()
    }

    #[inline]
    pub fn contains(&self, p: ProcessId) -> bool {
        self.correct.get(p.index()).copied().unwrap_or(false)
    }

    /// Marks `p` as crashed. Returns `false` if it was already gone.
    pub fn remove(&mut self, p: ProcessId) -> bool {
        match self.correct.get_mut(p.index()) {
            Some(slot) if *slot => {
                *slot = false;
                self.live -= 1;
                true
            }
            _ => false,
        }
    }

    /// Number of processes believed correct.
    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    /// Correct processes in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = ProcessId> + '_ {
        self.correct
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(|(i, _)| ProcessId(i as u32))
    }
}

/// Cluster structure of an `n = 2^d` process VCube.
#[derive(Clone, Debug)]
pub struct Topology {
    dim: u32,
    /// `offsets[s - 1]` is `C(0, s)`, the search order of level `s`.
    offsets: Vec<Vec<u32>>,
}

impl Topology {
    /// Builds the cluster tables. `n` must be a power of two, at least 2.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() || n > (1usize << 31) {
            return Err(Error::NotPowerOfTwo(n));
        }
        let dim = n.trailing_zeros();
        let mut offsets: Vec<Vec<u32>> = Vec::with_capacity(dim as usize);
        for s in 1..=dim {
            let b = 1u32 << (s - 1);
            let mut order = Vec::with_capacity(b as usize);
            order.push(b);
            for lower in &offsets {
                order.extend(lower.iter().map(|&o| b ^ o));
            }
            offsets.push(order);
        }
        Ok(Topology { dim, offsets })
    }

    pub fn n(&self) -> usize {
        1usize << self.dim
    }

    /// `d = log2 n`, the number of cluster levels.
    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn check_process(&self, p: ProcessId) -> Result<()> {
        if p.index() < self.n() {
            Ok(())
        } else {
            Err(Error::ProcessOutOfRange {
                process: p,
                n: self.n(),
            })
        }
    }

    pub fn cluster(&self, s: u32) -> Result<ClusterIndex> {
        if (1..=self.dim).contains(&s) {
            Ok(ClusterIndex(s))
        } else {
            Err(Error::ClusterOutOfRange { s, dim: self.dim })
        }
    }

    /// Ordered members of `C(i, s)`; the order is the `ff_neighbor` search order.
    pub fn cluster_members(&self, i: ProcessId, s: u32) -> Result<Vec<ProcessId>> {
        self.check_process(i)?;
        let s = self.cluster(s)?;
        Ok(self.members(i, s).collect())
    }

    pub(crate) fn members(
        &self,
        i: ProcessId,
        s: ClusterIndex,
    ) -> impl Iterator<Item = ProcessId> + '_ {
        self.offsets[(s.0 - 1) as usize]
            .iter()
            .map(move |&o| ProcessId(i.0 ^ o))
    }

    /// The level `s` such that `j` belongs to `C(i, s)`. Symmetric in `i`, `j`.
    pub fn cluster_index(&self, i: ProcessId, j: ProcessId) -> Result<ClusterIndex> {
        self.check_process(i)?;
        self.check_process(j)?;
        if i == j {
            return Err(Error::SameProcess(i));
        }
        Ok(cluster_of(i, j))
    }

    /// First member of `C(owner, s)` the view considers correct.
    pub fn ff_neighbor(&self, view: &View, s: u32) -> Result<Option<ProcessId>> {
        self.check_process(view.owner())?;
        let s = self.cluster(s)?;
        Ok(self.first_correct(view, s))
    }

    pub(crate) fn first_correct(&self, view: &View, s: ClusterIndex) -> Option<ProcessId> {
        self.members(view.owner(), s).find(|&p| view.contains(p))
    }

    /// FF neighbors of levels `1..=h`, in ascending level order. `h = 0` is empty.
    pub fn neighborhood(&self, view: &View, h: u32) -> Result<Vec<ProcessId>> {
        self.check_process(view.owner())?;
        if h > self.dim {
            return Err(Error::ClusterOutOfRange {
                s: h,
                dim: self.dim,
            });
        }
        Ok(self.neighbors_upto(view, h))
    }

    pub(crate) fn neighbors_upto(&self, view: &View, h: u32) -> Vec<ProcessId> {
        (1..=h)
            .filter_map(|s| self.first_correct(view, ClusterIndex(s)))
            .collect()
    }
}

/// `cluster_i(j)`: one plus the index of the highest bit where `i` and `j` differ.
#[inline]
pub(crate) fn cluster_of(i: ProcessId, j: ProcessId) -> ClusterIndex {
    debug_assert_ne!(i, j);
    ClusterIndex(32 - (i.0 ^ j.0).leading_zeros())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<ProcessId> {
        v.iter().copied().map(ProcessId).collect()
    }

    fn topo(n: usize) -> Topology {
        Topology::new(n).unwrap()
    }

    #[test]
    fn cluster_members_examples() {
        let t = topo(8);
        assert_eq!(t.cluster_members(ProcessId(0), 1).unwrap(), ids(&[1]));
        assert_eq!(t.cluster_members(ProcessId(4), 2).unwrap(), ids(&[6, 7]));
        assert_eq!(
            t.cluster_members(ProcessId(0), 3).unwrap(),
            ids(&[4, 5, 6, 7])
        );
        assert_eq!(t.cluster_members(ProcessId(5), 2).unwrap(), ids(&[7, 6]));
    }

    #[test]
    fn cluster_members_rejects_bad_level() {
        let t = topo(8);
        assert!(matches!(
            t.cluster_members(ProcessId(0), 0),
            Err(Error::ClusterOutOfRange { .. })
        ));
        assert!(t.cluster_members(ProcessId(0), 4).is_err());
        assert!(t.cluster_members(ProcessId(8), 1).is_err());
    }

    #[test]
    fn cluster_index_examples() {
        let t = topo(8);
        let c = |i, j| t.cluster_index(ProcessId(i), ProcessId(j)).unwrap().get();
        assert_eq!(c(0, 1), 1);
        assert_eq!(c(0, 2), 2);
        assert_eq!(c(0, 3), 2);
        assert_eq!(c(0, 5), 3);
        assert!(matches!(
            t.cluster_index(ProcessId(3), ProcessId(3)),
            Err(Error::SameProcess(_))
        ));
    }

    #[test]
    fn ff_neighbor_examples() {
        let t = topo(8);
        let v = View::all_correct(ProcessId(4), 8);
        assert_eq!(t.ff_neighbor(&v, 1).unwrap(), Some(ProcessId(5)));
        assert_eq!(t.ff_neighbor(&v, 2).unwrap(), Some(ProcessId(6)));
        assert_eq!(t.ff_neighbor(&v, 3).unwrap(), Some(ProcessId(0)));

        let v = View::with_crashed(ProcessId(4), 8, &ids(&[6]));
        assert_eq!(t.ff_neighbor(&v, 2).unwrap(), Some(ProcessId(7)));
        let v = View::with_crashed(ProcessId(4), 8, &ids(&[6, 7]));
        assert_eq!(t.ff_neighbor(&v, 2).unwrap(), None);
    }

    #[test]
    fn neighborhood_examples() {
        let t = topo(8);
        let v = View::all_correct(ProcessId(0), 8);
        assert_eq!(t.neighborhood(&v, 1).unwrap(), ids(&[1]));
        assert_eq!(t.neighborhood(&v, 2).unwrap(), ids(&[1, 2]));
        assert_eq!(t.neighborhood(&v, 3).unwrap(), ids(&[1, 2, 4]));
        assert!(t.neighborhood(&v, 0).unwrap().is_empty());

        let v = View::with_crashed(ProcessId(0), 8, &ids(&[4]));
        assert_eq!(t.neighborhood(&v, 3).unwrap(), ids(&[1, 2, 5]));
        let v = View::with_crashed(ProcessId(0), 8, &ids(&[1]));
        assert!(t.neighborhood(&v, 1).unwrap().is_empty());
        assert!(t.neighborhood(&v, 4).is_err());
    }

    #[test]
    fn rejects_non_power_of_two() {
        for n in [0, 1, 3, 6, 12, 1000] {
            assert!(
                matches!(Topology::new(n), Err(Error::NotPowerOfTwo(_))),
                "{n}"
            );
        }
        assert_eq!(topo(2).dim(), 1);
        assert_eq!(topo(1024).dim(), 10);
    }

    #[test]
    fn view_bookkeeping() {
        let mut v = View::all_correct(ProcessId(2), 4);
        assert_eq!(v.len(), 4);
        assert!(v.remove(ProcessId(1)));
        assert!(!v.remove(ProcessId(1)));
        assert!(!v.remove(ProcessId(9)));
        assert_eq!(v.iter().collect::<Vec<_>>(), ids(&[0, 2, 3]));
        assert!(!v.contains(ProcessId(9)));
    }
}
