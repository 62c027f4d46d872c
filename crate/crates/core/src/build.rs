//! Index construction: upper-layer sampling, beam-searched candidate
//! discovery, neighbor pruning, and bidirectional edge insertion.
//!
//! Vectors are inserted one at a time. A lower-only vector first descends
//! the upper layer greedily (beam of 1) to find its lower entry; a sampled
//! vector instead runs the full construction beam in the upper layer and
//! links there too. In each of its layers the insert runs an
//! `ef_construction`-wide unfiltered beam search, prunes the found
//! candidates to the layer's degree bound, links forward edges, and adds
//! reverse edges, re-pruning any neighbor whose slots overflow.
//!
//! The build driver hands out fixed-size morsels of vectors to workers that
//! insert concurrently into the shared stores. Readers may observe stale
//! adjacency during the build; the resulting approximation is tolerated and
//! bounded by the degree caps, which hold regardless of interleaving.

use alloc::vec::Vec;

use core::sync::atomic::{AtomicBool, Ordering};

use crate::dataset::{Dataset, NodeId};
use crate::dist::DistanceKind;
use crate::error::Error;
use crate::graph::{IndexParams, Layer, TwoLevelGraph};
use crate::heuristic::Heuristic;
use crate::sampling::sample_exact;
use crate::search::{
    search_layer, LayerQuery, MaskView, Scored, SearchCounters, DEFAULT_LENIENCY,
    DEFAULT_UB_ONEHOP,
};
use crate::Result;

/// Vectors handed to a build worker at a time.
pub const MORSEL_SIZE: usize = 2048;

/// Construction parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildParams {
    /// Max degree in the upper layer.
    pub m_upper: usize,
    /// Max degree in the lower layer.
    pub m_lower: usize,
    /// Construction beam width.
    pub ef_construction: usize,
    /// Fraction of nodes sampled into the upper layer.
    pub sample_rate: f64,
    pub kind: DistanceKind,
    pub threads: usize,
    pub seed: u64,
}

impl BuildParams {
    pub fn new(m_upper: usize, kind: DistanceKind) -> Self {
        BuildParams {
            m_upper,
            m_lower: 2 * m_upper,
            ef_construction: (2 * m_upper).max(100),
            sample_rate: 0.05,
            kind,
            threads: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_upper < 2 {
            return Err(Error::usage("m_upper must be at least 2"));
        }
        if self.m_lower < self.m_upper {
            return Err(Error::usage("m_lower must be at least m_upper"));
        }
        if self.ef_construction < self.m_lower {
            return Err(Error::usage("ef_construction must be at least m_lower"));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate <= 1.0) {
            return Err(Error::usage("sample_rate must be in (0, 1]"));
        }
        if self.threads == 0 {
            return Err(Error::usage("threads must be at least 1"));
        }
        Ok(())
    }

    pub fn index_params(&self) -> IndexParams {
        IndexParams {
            m_upper: self.m_upper,
            m_lower: self.m_lower,
            ef_construction: self.ef_construction,
            sample_rate: self.sample_rate,
            kind: self.kind,
            seed: self.seed,
        }
    }
}

/// Draws `round(rate * n)` distinct nodes (at least one) uniformly without
/// replacement; sorted, deterministic per seed.
pub fn sample_upper(n: usize, rate: f64, seed: u64) -> Result<Vec<NodeId>> {
    if n == 0 {
        return Err(Error::usage("cannot sample from an empty dataset"));
    }
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::usage("sample rate must be in (0, 1]"));
    }
    let count = (libm::round(rate * n as f64) as usize).clamp(1, n);
    Ok(sample_exact(n, count, seed)
        .into_iter()
        .map(NodeId)
        .collect())
}

/// Relative-neighborhood pruning: scan candidates nearest-first and keep
/// `u` only if it is closer to `w` than to every already-kept node, up to
/// `cap` kept. `candidates` carry their distance to `w` and are sorted here
/// by `(distance, id)`, so ties break toward lower ids.
pub fn select_neighbors_prune(
    w: NodeId,
    candidates: &mut Vec<Scored>,
    cap: usize,
    mut between: impl FnMut(NodeId, NodeId) -> f64,
) -> Vec<NodeId> {
    candidates.sort_unstable();
    let mut kept: Vec<Scored> = Vec::new();
    for &c in candidates.iter() {
        if kept.len() == cap {
            break;
        }
        if c.node == w {
            continue;
        }
        let closer_to_w = kept.iter().all(|t| between(c.node, t.node) > c.dist.0);
        if closer_to_w {
            kept.push(c);
        }
    }
    kept.into_iter().map(|s| s.node).collect()
}

/// A pruning decision recorded during a traced insert, for auditing that
/// every published prune output satisfies the relative-neighborhood rule.
#[derive(Debug, Clone)]
pub struct PruneEvent {
    pub layer: Layer,
    pub target: NodeId,
    pub kept: Vec<NodeId>,
}

/// Shared-state inserter; `insert` may be called from many threads.
pub struct GraphBuilder<'a> {
    dataset: &'a Dataset,
    params: BuildParams,
    graph: TwoLevelGraph,
    inserted: Vec<AtomicBool>,
}

impl<'a> GraphBuilder<'a> {
    pub fn new(dataset: &'a Dataset, params: &BuildParams) -> Result<Self> {
        params.validate()?;
        if dataset.is_empty() {
            return Err(Error::usage("cannot build an index over an empty dataset"));
        }
        if params.kind == DistanceKind::Cosine {
            for i in 0..dataset.len() {
                let v = NodeId(i as u32);
                if dataset.row(v).iter().all(|&x| x == 0.0) {
                    return Err(Error::usage(alloc::format!(
                        "vector {v} has zero norm; cosine index cannot be built"
                    )));
                }
            }
        }
        let members = sample_upper(dataset.len(), params.sample_rate, params.seed)?;
        let graph = TwoLevelGraph::empty(dataset.len(), params.index_params(), members)?;
        let mut inserted = Vec::with_capacity(dataset.len());
        for _ in 0..dataset.len() {
            inserted.push(AtomicBool::new(false));
        }
        // The first sampled node seeds both layers and stays the fixed
        // entry point for every later insert and search.
        inserted[graph.entry().index()].store(true, Ordering::Release);
        Ok(GraphBuilder {
            dataset,
            params: *params,
            graph,
            inserted,
        })
    }

    pub fn graph(&self) -> &TwoLevelGraph {
        &self.graph
    }

    pub fn finish(self) -> TwoLevelGraph {
        self.graph
    }

    /// Inserts one vector; the entry node is pre-inserted at construction.
    pub fn insert(&self, v: NodeId) -> Result<()> {
        self.insert_inner(v, &mut None)
    }

    /// Like [`GraphBuilder::insert`], recording every pruning decision.
    pub fn insert_traced(&self, v: NodeId, trace: &mut Vec<PruneEvent>) -> Result<()> {
        let mut t = Some(core::mem::take(trace));
        let r = self.insert_inner(v, &mut t);
        *trace = t.unwrap_or_default();
        r
    }

    fn insert_inner(&self, v: NodeId, trace: &mut Option<Vec<PruneEvent>>) -> Result<()> {
        let n = self.dataset.len();
        if v.index() >= n {
            return Err(Error::usage(alloc::format!("node {v} out of range")));
        }
        if self.inserted[v.index()].swap(true, Ordering::AcqRel) {
            return Err(Error::usage(alloc::format!("node {v} inserted twice")));
        }
        let kind = self.params.kind;
        let query = self.dataset.row(v);
        let entry = self.graph.entry();
        let seed = Scored::new(self.dataset.distance_between(kind, v, entry), entry);
        let mut scratch = SearchCounters::default();

        // Find the lower-layer entry; sampled nodes also link in the upper
        // layer along the way.
        let lower_seed = if self.graph.is_upper(v) {
            let req = LayerQuery {
                query,
                seeds: &[seed],
                efs: self.params.ef_construction,
                heuristic: Heuristic::OnehopA,
                lf: DEFAULT_LENIENCY,
                ub_onehop: DEFAULT_UB_ONEHOP,
            };
            let mut found =
                search_layer(&self.graph, Layer::Upper, self.dataset, &req, MaskView::All, &mut scratch)?;
            // A racing reverse edge can already point back at v.
            found.retain(|s| s.node != v);
            self.link(Layer::Upper, v, &found, self.params.m_upper, trace)?;
            found.first().copied().unwrap_or(seed)
        } else {
            let req = LayerQuery {
                query,
                seeds: &[seed],
                efs: 1,
                heuristic: Heuristic::OnehopA,
                lf: DEFAULT_LENIENCY,
                ub_onehop: DEFAULT_UB_ONEHOP,
            };
            let found =
                search_layer(&self.graph, Layer::Upper, self.dataset, &req, MaskView::All, &mut scratch)?;
            found.first().copied().unwrap_or(seed)
        };

        let req = LayerQuery {
            query,
            seeds: &[lower_seed],
            efs: self.params.ef_construction,
            heuristic: Heuristic::OnehopA,
            lf: DEFAULT_LENIENCY,
            ub_onehop: DEFAULT_UB_ONEHOP,
        };
        let mut found =
            search_layer(&self.graph, Layer::Lower, self.dataset, &req, MaskView::All, &mut scratch)?;
        found.retain(|s| s.node != v);
        self.link(Layer::Lower, v, &found, self.params.m_lower, trace)?;
        Ok(())
    }

    /// Prunes `found` to `cap`, publishes the forward list of `v`, and adds
    /// reverse edges, re-pruning a neighbor when its slots would overflow.
    fn link(
        &self,
        layer: Layer,
        v: NodeId,
        found: &[Scored],
        cap: usize,
        trace: &mut Option<Vec<PruneEvent>>,
    ) -> Result<()> {
        let kind = self.params.kind;
        let between = |a: NodeId, b: NodeId| self.dataset.distance_between(kind, a, b);
        let mut cands = found.to_vec();
        let kept = select_neighbors_prune(v, &mut cands, cap, between);
        if let Some(t) = trace.as_mut() {
            t.push(PruneEvent {
                layer,
                target: v,
                kept: kept.clone(),
            });
        }
        self.graph.set_neighbors(layer, v, &kept)?;
        for &w in &kept {
            self.graph.update_neighbors(layer, w, |list| {
                if list.contains(&v) {
                    return;
                }
                if list.len() < cap {
                    list.push(v);
                    return;
                }
                let mut cands: Vec<Scored> = list
                    .iter()
                    .map(|&u| Scored::new(between(u, w), u))
                    .collect();
                cands.push(Scored::new(between(v, w), v));
                let re_kept = select_neighbors_prune(w, &mut cands, cap, between);
                if let Some(t) = trace.as_mut() {
                    t.push(PruneEvent {
                        layer,
                        target: w,
                        kept: re_kept.clone(),
                    });
                }
                *list = re_kept;
            })?;
        }
        Ok(())
    }
}

/// Builds the two-level graph, inserting every vector exactly once.
///
/// With `threads = 1` insertion order is `0..n` and the result is
/// bit-identical across runs for a fixed seed. With more threads, workers
/// claim 2048-vector morsels from a shared cursor and insert concurrently.
#[cfg(feature = "std")]
pub fn build(dataset: &Dataset, params: &BuildParams) -> Result<TwoLevelGraph> {
    use core::sync::atomic::AtomicUsize;

    let builder = GraphBuilder::new(dataset, params)?;
    let n = dataset.len();
    let entry = builder.graph().entry();
    if params.threads == 1 {
        for i in 0..n {
            let v = NodeId(i as u32);
            if v != entry {
                builder.insert(v)?;
            }
        }
    } else {
        let morsels = n.div_ceil(MORSEL_SIZE);
        let cursor = AtomicUsize::new(0);
        let failed: std::sync::Mutex<Option<Error>> = std::sync::Mutex::new(None);
        std::thread::scope(|scope| {
            for _ in 0..params.threads {
                scope.spawn(|| loop {
                    let m = cursor.fetch_add(1, Ordering::Relaxed);
                    if m >= morsels || failed.lock().unwrap().is_some() {
                        break;
                    }
                    let start = m * MORSEL_SIZE;
                    let end = (start + MORSEL_SIZE).min(n);
                    for i in start..end {
                        let v = NodeId(i as u32);
                        if v == entry {
                            continue;
                        }
                        if let Err(e) = builder.insert(v) {
                            *failed.lock().unwrap() = Some(e);
                            return;
                        }
                    }
                });
            }
        });
        if let Some(e) = failed.into_inner().unwrap() {
            return Err(e);
        }
    }
    Ok(builder.finish())
}
