//! Degree-bounded two-level adjacency structure.
//!
//! Each node owns a fixed-capacity slot array. Readers are lock-free: a
//! node's degree is published with a release store after its slots are
//! written, and every slot is an atomic word, so a concurrent reader sees a
//! well-formed list of valid node ids — possibly stale, never torn garbage.
//! Writers to the *same* node serialize on a per-node spinlock; writers to
//! distinct nodes never contend.

use alloc::format;
use alloc::vec::Vec;

use core::sync::atomic::{AtomicBool, AtomicU32, Ordering};

use crate::dataset::NodeId;
use crate::dist::DistanceKind;
use crate::error::Error;
use crate::Result;

/// Which layer of the two-level graph an operation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Upper,
    Lower,
}

struct NodeLock(AtomicBool);

impl NodeLock {
    const fn new() -> Self {
        NodeLock(AtomicBool::new(false))
    }

    fn lock(&self) -> LockGuard<'_> {
        while self
            .0
            .compare_exchange_weak(false, true, Ordering::Acquire, Ordering::Relaxed)
            .is_err()
        {
            core::hint::spin_loop();
        }
        LockGuard(self)
    }
}

struct LockGuard<'a>(&'a NodeLock);

impl Drop for LockGuard<'_> {
    fn drop(&mut self) {
        self.0 .0.store(false, Ordering::Release);
    }
}

/// Fixed-capacity adjacency store for one layer.
pub struct AdjacencyStore {
    node_count: usize,
    cap: usize,
    degrees: Vec<AtomicU32>,
    slots: Vec<AtomicU32>,
    locks: Vec<NodeLock>,
}

impl AdjacencyStore {
    pub fn new(node_count: usize, cap: usize) -> Self {
        let mut degrees = Vec::with_capacity(node_count);
        let mut slots = Vec::with_capacity(node_count * cap);
        let mut locks = Vec::with_capacity(node_count);
        for _ in 0..node_count {
            degrees.push(AtomicU32::new(0));
            locks.push(NodeLock::new());
        }
        for _ in 0..node_count * cap {
            slots.push(AtomicU32::new(0));
        }
        AdjacencyStore {
            node_count,
            cap,
            degrees,
            slots,
            locks,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.degrees[v].load(Ordering::Acquire) as usize
    }

    /// Appends the current neighbor list of `v` (insertion order) to `out`.
    #[inline]
    pub fn neighbors_into(&self, v: usize, out: &mut Vec<NodeId>) {
        let deg = self.degree(v);
        let base = v * self.cap;
        out.reserve(deg);
        for i in 0..deg {
            out.push(NodeId(self.slots[base + i].load(Ordering::Relaxed)));
        }
    }

    pub fn neighbors(&self, v: usize) -> Vec<NodeId> {
        let mut out = Vec::new();
        self.neighbors_into(v, &mut out);
        out
    }

    /// `owner` is the original node id the row belongs to — rows of the
    /// upper store are dense positions, so the self-loop check cannot use
    /// the row index.
    fn validate(&self, owner: NodeId, nbrs: &[NodeId]) -> Result<()> {
        if nbrs.len() > self.cap {
            return Err(Error::usage(format!(
                "{} neighbors exceed slot capacity {} (prune first)",
                nbrs.len(),
                self.cap
            )));
        }
        if nbrs.contains(&owner) {
            return Err(Error::usage(format!("self-loop on node {owner}")));
        }
        Ok(())
    }

    /// Atomically replaces the neighbor list stored in row `v`.
    ///
    /// Neighbor ids are validated against `universe` (the id space edges may
    /// reference, which differs from `node_count` for the upper layer).
    pub fn set_neighbors(
        &self,
        v: usize,
        owner: NodeId,
        nbrs: &[NodeId],
        universe: usize,
    ) -> Result<()> {
        self.validate(owner, nbrs)?;
        if let Some(bad) = nbrs.iter().find(|n| n.index() >= universe) {
            return Err(Error::usage(format!(
                "edge target {bad} outside universe {universe}"
            )));
        }
        let _g = self.locks[v].lock();
        self.publish(v, nbrs);
        Ok(())
    }

    /// Read-modify-write of one node's list under its writer lock. The
    /// closure gets the current list and must leave at most `cap` entries.
    pub fn update_neighbors(
        &self,
        v: usize,
        owner: NodeId,
        f: impl FnOnce(&mut Vec<NodeId>),
    ) -> Result<()> {
        let _g = self.locks[v].lock();
        let mut list = self.neighbors(v);
        f(&mut list);
        self.validate(owner, &list)?;
        self.publish(v, &list);
        Ok(())
    }

    /// Slots first, then a release store of the degree.
    fn publish(&self, v: usize, nbrs: &[NodeId]) {
        let base = v * self.cap;
        for (i, n) in nbrs.iter().enumerate() {
            self.slots[base + i].store(n.0, Ordering::Relaxed);
        }
        self.degrees[v].store(nbrs.len() as u32, Ordering::Release);
    }
}

/// Build-time and search-time parameters stamped into the index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexParams {
    /// Max degree in the upper layer.
    pub m_upper: usize,
    /// Max degree in the lower layer (twice `m_upper` by default).
    pub m_lower: usize,
    /// Construction beam width.
    pub ef_construction: usize,
    /// Fraction of nodes sampled into the upper layer.
    pub sample_rate: f64,
    pub kind: DistanceKind,
    pub seed: u64,
}

/// The two-level proximity graph: a lower layer over all `n` nodes and an
/// upper layer over a sampled subset, entered at a fixed node.
pub struct TwoLevelGraph {
    params: IndexParams,
    n: usize,
    lower: AdjacencyStore,
    /// Indexed by dense upper position; slot values are original node ids.
    upper: AdjacencyStore,
    /// Sorted original ids of upper-layer members.
    upper_members: Vec<NodeId>,
    /// Original id -> dense upper position (`u32::MAX` = not a member).
    upper_pos: Vec<u32>,
    entry: NodeId,
}

impl TwoLevelGraph {
    /// An edgeless graph over `n` nodes with the given upper membership.
    /// The entry point is the first (lowest-id) upper member.
    pub fn empty(n: usize, params: IndexParams, upper_members: Vec<NodeId>) -> Result<Self> {
        if n == 0 {
            return Err(Error::usage("graph over an empty dataset"));
        }
        if upper_members.is_empty() {
            return Err(Error::usage("upper layer must contain at least one node"));
        }
        if upper_members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::usage("upper members must be sorted and distinct"));
        }
        if upper_members.last().unwrap().index() >= n {
            return Err(Error::usage("upper member outside node range"));
        }
        let mut upper_pos = alloc::vec![u32::MAX; n];
        for (dense, m) in upper_members.iter().enumerate() {
            upper_pos[m.index()] = dense as u32;
        }
        let entry = upper_members[0];
        Ok(TwoLevelGraph {
            lower: AdjacencyStore::new(n, params.m_lower),
            upper: AdjacencyStore::new(upper_members.len(), params.m_upper),
            params,
            n,
            upper_members,
            upper_pos,
            entry,
        })
    }

    pub fn params(&self) -> &IndexParams {
        &self.params
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn entry(&self) -> NodeId {
        self.entry
    }

    pub fn upper_members(&self) -> &[NodeId] {
        &self.upper_members
    }

    pub fn is_upper(&self, v: NodeId) -> bool {
        v.index() < self.n && self.upper_pos[v.index()] != u32::MAX
    }

    pub fn lower_store(&self) -> &AdjacencyStore {
        &self.lower
    }

    pub fn upper_store(&self) -> &AdjacencyStore {
        &self.upper
    }

    fn upper_dense(&self, v: NodeId) -> Result<usize> {
        if v.index() >= self.n {
            return Err(Error::usage(format!("node {v} out of range")));
        }
        match self.upper_pos[v.index()] {
            u32::MAX => Err(Error::usage(format!("node {v} is not in the upper layer"))),
            d => Ok(d as usize),
        }
    }

    /// Current neighbor list of `v` in a layer, in insertion order.
    pub fn neighbors(&self, layer: Layer, v: NodeId) -> Result<Vec<NodeId>> {
        let mut out = Vec::new();
        self.neighbors_into(layer, v, &mut out)?;
        Ok(out)
    }

    pub fn set_neighbors(&self, layer: Layer, v: NodeId, nbrs: &[NodeId]) -> Result<()> {
        match layer {
            Layer::Lower => self.lower.set_neighbors(v.index(), v, nbrs, self.n),
            Layer::Upper => {
                let dense = self.upper_dense(v)?;
                for n in nbrs {
                    if !self.is_upper(*n) {
                        return Err(Error::usage(format!(
                            "upper edge target {n} is not an upper member"
                        )));
                    }
                }
                self.upper.set_neighbors(dense, v, nbrs, self.n)
            }
        }
    }

    pub fn update_neighbors(
        &self,
        layer: Layer,
        v: NodeId,
        f: impl FnOnce(&mut Vec<NodeId>),
    ) -> Result<()> {
        match layer {
            Layer::Lower => self.lower.update_neighbors(v.index(), v, f),
            Layer::Upper => self.upper.update_neighbors(self.upper_dense(v)?, v, f),
        }
    }

    /// Per-node adjacency snapshot of a layer, for persistence and
    /// equality checks. Indexed by original id for the lower layer and by
    /// dense upper position for the upper layer.
    pub fn snapshot(&self, layer: Layer) -> Vec<Vec<NodeId>> {
        match layer {
            Layer::Lower => (0..self.n).map(|v| self.lower.neighbors(v)).collect(),
            Layer::Upper => (0..self.upper_members.len())
                .map(|d| self.upper.neighbors(d))
                .collect(),
        }
    }
}

/// Read access a search needs from an index, in-memory or disk-backed.
pub trait SearchIndex {
    fn node_count(&self) -> usize;

    fn distance_kind(&self) -> DistanceKind;

    fn entry(&self) -> NodeId;

    /// Degree bound of a layer; doubles as the 2-hop exploration budget and
    /// the `M` of the adaptive decision rule.
    fn max_degree(&self, layer: Layer) -> usize;

    /// Clears `out` and fills it with the neighbor list of `v`.
    fn neighbors_into(&self, layer: Layer, v: NodeId, out: &mut Vec<NodeId>) -> Result<()>;
}

impl SearchIndex for TwoLevelGraph {
    fn node_count(&self) -> usize {
        self.n
    }

    fn distance_kind(&self) -> DistanceKind {
        self.params.kind
    }

    fn entry(&self) -> NodeId {
        self.entry
    }

    fn max_degree(&self, layer: Layer) -> usize {
        match layer {
            Layer::Upper => self.params.m_upper,
            Layer::Lower => self.params.m_lower,
        }
    }

    fn neighbors_into(&self, layer: Layer, v: NodeId, out: &mut Vec<NodeId>) -> Result<()> {
        out.clear();
        match layer {
            Layer::Lower => {
                if v.index() >= self.n {
                    return Err(Error::usage(format!("node {v} out of range")));
                }
                self.lower.neighbors_into(v.index(), out);
            }
            Layer::Upper => {
                let dense = self.upper_dense(v)?;
                self.upper.neighbors_into(dense, out);
            }
        }
        Ok(())
    }
}
