//! Beam search over one graph layer with pluggable candidate exploration.
//!
//! The loop is the classic one: pop the closest unexplored candidate
//! `c_min`, stop when it is farther than the worst of the `efs` best
//! results seen so far, otherwise explore its neighborhood. What "explore"
//! means is the heuristic:
//!
//! * `onehop-a` visits every unvisited 1st-degree neighbor;
//! * `onehop-s` visits only selected ones and never touches the rest;
//! * `blind` visits selected 1st-degree neighbors, then reaches selected
//!   2nd-degree ones through unselected bridges in adjacency order until
//!   the layer's degree bound `M` selected vectors have been explored;
//! * `directed` pays a distance computation for every 1st-degree neighbor
//!   and expands bridges nearest-first under the same budget;
//! * the adaptive modes resolve to one of the above per query
//!   (`adaptive-g`, from global selectivity) or per candidate
//!   (`adaptive-l`, from the selected fraction of `c_min`'s neighbors).
//!
//! Results only ever contain selected nodes. Unselected nodes can enter the
//! candidate queue (as exploration stepping stones) but never the result
//! queue, so a query returns only vectors that pass the semimask.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::bitset::Bitset;
use crate::dataset::NodeId;
use crate::dist::{Dist, DistanceKind};
use crate::error::Error;
use crate::graph::{Layer, SearchIndex};
use crate::heuristic::{choose_fixed, FixedChoice, Heuristic};
use crate::prefilter::Semimask;
use crate::source::{distance_to, VectorSource};
use crate::Result;

pub const DEFAULT_LENIENCY: f64 = 3.0;
pub const DEFAULT_UB_ONEHOP: f64 = 0.5;

/// A `(distance, node)` pair; orders by distance, then id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Scored {
    pub dist: Dist,
    pub node: NodeId,
}

impl Scored {
    pub fn new(dist: f64, node: NodeId) -> Self {
        Scored {
            dist: Dist(dist),
            node,
        }
    }
}

/// Query-time parameters.
#[derive(Debug, Clone, Copy)]
pub struct SearchParams {
    /// Number of results to return.
    pub k: usize,
    /// Beam width; the result queue holds at most this many nodes.
    pub efs: usize,
    pub heuristic: Heuristic,
    /// Leniency factor of the directed-vs-blind rule.
    pub lf: f64,
    /// Selectivity at or above which the adaptive rule picks `onehop-s`.
    pub ub_onehop: f64,
}

impl SearchParams {
    pub fn new(k: usize, efs: usize, heuristic: Heuristic) -> Self {
        SearchParams {
            k,
            efs,
            heuristic,
            lf: DEFAULT_LENIENCY,
            ub_onehop: DEFAULT_UB_ONEHOP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::usage("k must be at least 1"));
        }
        if self.efs < self.k {
            return Err(Error::usage("efs must be at least k"));
        }
        if self.lf < 1.0 {
            return Err(Error::usage("leniency factor must be at least 1"));
        }
        if !(self.ub_onehop > 0.0 && self.ub_onehop <= 1.0) {
            return Err(Error::usage("ub_onehop must be in (0, 1]"));
        }
        Ok(())
    }
}

/// Exploration counts per heuristic actually run (adaptive modes mix).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HeuristicHistogram {
    pub onehop_s: u64,
    pub blind: u64,
    pub directed: u64,
}

impl HeuristicHistogram {
    pub fn total(&self) -> u64 {
        self.onehop_s + self.blind + self.directed
    }

    pub fn nonzero_buckets(&self) -> usize {
        [self.onehop_s, self.blind, self.directed]
            .iter()
            .filter(|&&c| c > 0)
            .count()
    }
}

/// Cost counters of one search.
///
/// `t_dc` counts every distance computation; `s_dc` those against vectors
/// selected in the phase's effective mask (the upper-layer descent is
/// unfiltered, so its computations count toward both). `popped` counts
/// candidates popped and explored in the filtered layer; for the three
/// masked heuristics the histogram sums to `popped`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchCounters {
    pub t_dc: u64,
    pub s_dc: u64,
    pub popped: u64,
    pub hist: HeuristicHistogram,
}

impl SearchCounters {
    pub fn merge(&mut self, other: &SearchCounters) {
        self.t_dc += other.t_dc;
        self.s_dc += other.s_dc;
        self.popped += other.popped;
        self.hist.onehop_s += other.hist.onehop_s;
        self.hist.blind += other.hist.blind;
        self.hist.directed += other.hist.directed;
    }
}

/// The selected set as the search sees it: either everything (unfiltered
/// phases) or a semimask.
#[derive(Clone, Copy)]
pub enum MaskView<'a> {
    All,
    Bits(&'a Semimask),
}

impl MaskView<'_> {
    #[inline]
    pub fn contains(&self, v: NodeId) -> bool {
        match self {
            MaskView::All => true,
            MaskView::Bits(m) => m.contains(v),
        }
    }

    pub fn global_selectivity(&self) -> f64 {
        match self {
            MaskView::All => 1.0,
            MaskView::Bits(m) => m.global_selectivity(),
        }
    }

    pub fn local_selectivity(&self, nbrs: &[NodeId]) -> f64 {
        match self {
            MaskView::All => {
                if nbrs.is_empty() {
                    0.0
                } else {
                    1.0
                }
            }
            MaskView::Bits(m) => m.local_selectivity(nbrs),
        }
    }
}

/// One layer-search request.
#[derive(Clone, Copy)]
pub struct LayerQuery<'a> {
    pub query: &'a [f32],
    /// Entry nodes with their (already computed) distances to the query.
    /// Seed distances are supplied by the caller and are not re-measured.
    pub seeds: &'a [Scored],
    pub efs: usize,
    pub heuristic: Heuristic,
    pub lf: f64,
    pub ub_onehop: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Explore {
    OnehopAll,
    OnehopSelected,
    Blind,
    Directed,
}

impl From<FixedChoice> for Explore {
    fn from(c: FixedChoice) -> Self {
        match c {
            FixedChoice::OnehopS => Explore::OnehopSelected,
            FixedChoice::Blind => Explore::Blind,
            FixedChoice::Directed => Explore::Directed,
        }
    }
}

struct LayerState<'a, I: SearchIndex, S: VectorSource> {
    index: &'a I,
    layer: Layer,
    source: &'a S,
    kind: DistanceKind,
    query: &'a [f32],
    mask: MaskView<'a>,
    efs: usize,
    /// 2-hop exploration budget and the `M` of the adaptive rule: the
    /// layer's degree bound.
    budget: usize,
    lf: f64,
    ub_onehop: f64,
    candidates: BinaryHeap<Reverse<Scored>>,
    results: BinaryHeap<Scored>,
    visited: Bitset,
    counters: &'a mut SearchCounters,
    /// Worst kept distance the last time the result queue was full; the
    /// beam only ever tightens once full.
    prev_full_max: Option<Dist>,
}

impl<I: SearchIndex, S: VectorSource> LayerState<'_, I, S> {
    #[inline]
    fn measure(&mut self, n: NodeId) -> Result<f64> {
        let d = distance_to(self.source, self.kind, self.query, n, &mut self.counters.t_dc)?;
        if self.mask.contains(n) {
            self.counters.s_dc += 1;
        }
        Ok(d)
    }

    /// The insertion rule: admit into the candidate queue if the beam is
    /// not full or the node improves on the worst kept result; selected
    /// nodes also enter the result queue, evicting beyond `efs`.
    fn consider(&mut self, d: f64, n: NodeId, selected: bool) {
        let admit = self.results.len() < self.efs
            || Dist(d) < self.results.peek().expect("nonempty").dist;
        if !admit {
            return;
        }
        self.candidates.push(Reverse(Scored::new(d, n)));
        if selected {
            self.results.push(Scored::new(d, n));
            if self.results.len() > self.efs {
                self.results.pop();
            }
        }
        if self.results.len() == self.efs {
            let worst = self.results.peek().expect("nonempty").dist;
            if let Some(prev) = self.prev_full_max {
                debug_assert!(worst <= prev, "beam widened after filling");
            }
            self.prev_full_max = Some(worst);
        }
    }

    fn explore_onehop(&mut self, nbrs: &[NodeId], selected_only: bool) -> Result<()> {
        for &n in nbrs {
            let selected = self.mask.contains(n);
            if selected_only && !selected {
                // Skipped entirely: not visited-marked, not measured.
                continue;
            }
            if self.visited.test_and_set(n.index()) {
                continue;
            }
            let d = self.measure(n)?;
            self.consider(d, n, selected);
        }
        Ok(())
    }

    fn explore_blind(&mut self, nbrs: &[NodeId]) -> Result<()> {
        let mut explored = 0usize;
        let mut bridges: Vec<NodeId> = Vec::new();
        for &n in nbrs {
            if self.mask.contains(n) {
                if !self.visited.test_and_set(n.index()) {
                    let d = self.measure(n)?;
                    self.consider(d, n, true);
                    explored += 1;
                }
            } else if !self.visited.test(n.index()) {
                // Bridges cost no distance computation; they are marked
                // visited only when actually expanded below.
                bridges.push(n);
            }
        }
        'bridges: for &b in &bridges {
            if explored >= self.budget {
                break;
            }
            self.visited.set(b.index());
            let mut second = Vec::new();
            self.index.neighbors_into(self.layer, b, &mut second)?;
            for &w in &second {
                if explored >= self.budget {
                    break 'bridges;
                }
                if !self.mask.contains(w) || self.visited.test_and_set(w.index()) {
                    continue;
                }
                let d = self.measure(w)?;
                self.consider(d, w, true);
                explored += 1;
            }
        }
        Ok(())
    }

    fn explore_directed(&mut self, nbrs: &[NodeId]) -> Result<()> {
        let mut explored = 0usize;
        let mut bridges: Vec<Scored> = Vec::new();
        for &n in nbrs {
            if self.visited.test_and_set(n.index()) {
                continue;
            }
            // Every unvisited 1st-degree neighbor is measured, selected or
            // not; that is directed's overhead and its ordering information.
            let d = self.measure(n)?;
            if self.mask.contains(n) {
                self.consider(d, n, true);
                explored += 1;
            } else {
                bridges.push(Scored::new(d, n));
            }
        }
        bridges.sort_unstable();
        'bridges: for b in &bridges {
            if explored >= self.budget {
                break;
            }
            let mut second = Vec::new();
            self.index.neighbors_into(self.layer, b.node, &mut second)?;
            for &w in &second {
                if explored >= self.budget {
                    break 'bridges;
                }
                if !self.mask.contains(w) || self.visited.test_and_set(w.index()) {
                    continue;
                }
                let d = self.measure(w)?;
                self.consider(d, w, true);
                explored += 1;
            }
        }
        Ok(())
    }

    fn run(&mut self, heuristic: Heuristic) -> Result<()> {
        let fixed = match heuristic {
            Heuristic::OnehopA => Some(Explore::OnehopAll),
            Heuristic::OnehopS => Some(Explore::OnehopSelected),
            Heuristic::Blind => Some(Explore::Blind),
            Heuristic::Directed => Some(Explore::Directed),
            Heuristic::AdaptiveGlobal => Some(
                choose_fixed(
                    self.mask.global_selectivity(),
                    self.budget,
                    self.lf,
                    self.ub_onehop,
                )
                .into(),
            ),
            Heuristic::AdaptiveLocal => None,
        };
        let mut nbrs: Vec<NodeId> = Vec::new();
        while let Some(Reverse(top)) = self.candidates.pop() {
            let r_max = if self.results.len() >= self.efs {
                self.results.peek().expect("nonempty").dist
            } else {
                Dist(f64::INFINITY)
            };
            if top.dist > r_max {
                break;
            }
            self.index.neighbors_into(self.layer, top.node, &mut nbrs)?;
            let explore = fixed.unwrap_or_else(|| {
                // adaptive-local: decide per candidate from bit tests only.
                let sigma_l = self.mask.local_selectivity(&nbrs);
                choose_fixed(sigma_l, self.budget, self.lf, self.ub_onehop).into()
            });
            self.counters.popped += 1;
            match explore {
                Explore::OnehopAll => self.explore_onehop(&nbrs, false)?,
                Explore::OnehopSelected => {
                    self.counters.hist.onehop_s += 1;
                    self.explore_onehop(&nbrs, true)?;
                }
                Explore::Blind => {
                    self.counters.hist.blind += 1;
                    self.explore_blind(&nbrs)?;
                }
                Explore::Directed => {
                    self.counters.hist.directed += 1;
                    self.explore_directed(&nbrs)?;
                }
            }
        }
        Ok(())
    }
}

/// Beam search in one layer. Returns the result queue sorted ascending by
/// `(distance, id)`; the caller truncates to `k`.
///
/// Seeds enter the candidate queue (and, if selected, the result queue)
/// with their caller-supplied distances; no distance is recomputed for
/// them. An unselected seed guides the search but can never be returned.
pub fn search_layer<I: SearchIndex, S: VectorSource>(
    index: &I,
    layer: Layer,
    source: &S,
    req: &LayerQuery<'_>,
    mask: MaskView<'_>,
    counters: &mut SearchCounters,
) -> Result<Vec<Scored>> {
    if req.seeds.is_empty() {
        return Err(Error::usage("layer search needs at least one entry"));
    }
    if req.efs == 0 {
        return Err(Error::usage("efs must be at least 1"));
    }
    // Degenerate selection: nothing can ever be returned, so do no work
    // and leave the counters untouched.
    if let MaskView::Bits(m) = mask {
        if m.selected_count() == 0 {
            return Ok(Vec::new());
        }
    }
    let n = index.node_count();
    let mut state = LayerState {
        index,
        layer,
        source,
        kind: index.distance_kind(),
        query: req.query,
        mask,
        efs: req.efs,
        budget: index.max_degree(layer),
        lf: req.lf,
        ub_onehop: req.ub_onehop,
        candidates: BinaryHeap::new(),
        results: BinaryHeap::new(),
        visited: Bitset::new(n),
        counters,
        prev_full_max: None,
    };
    for &seed in req.seeds {
        if seed.node.index() >= n {
            return Err(Error::usage(alloc::format!(
                "seed {} out of range",
                seed.node
            )));
        }
        if state.visited.test_and_set(seed.node.index()) {
            continue;
        }
        state.candidates.push(Reverse(seed));
        if mask.contains(seed.node) {
            state.results.push(seed);
            if state.results.len() > req.efs {
                state.results.pop();
            }
        }
    }
    state.run(req.heuristic)?;
    let mut out = state.results.into_vec();
    out.sort_unstable();
    Ok(out)
}

/// Output of a top-level search: up to `k` selected hits ascending by
/// distance, plus the counters accumulated over both layers.
#[derive(Debug, Clone)]
pub struct SearchOutput {
    pub hits: Vec<Scored>,
    pub counters: SearchCounters,
}

/// Full two-level filtered kNN search.
///
/// The upper layer is descended unfiltered with a beam of 1 to find the
/// lower-layer entry (which may be unselected); the lower layer then runs
/// the requested heuristic against the semimask. Fewer than `k` hits are
/// returned when fewer selected vectors are reachable; an empty mask yields
/// an empty result with zero counters.
pub fn knn_search<I: SearchIndex, S: VectorSource>(
    index: &I,
    source: &S,
    query: &[f32],
    params: &SearchParams,
    mask: &Semimask,
) -> Result<SearchOutput> {
    params.validate()?;
    if query.len() != source.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            actual: query.len(),
        });
    }
    if mask.len() != index.node_count() {
        return Err(Error::format(alloc::format!(
            "mask covers {} nodes, index has {}",
            mask.len(),
            index.node_count()
        )));
    }
    let mut counters = SearchCounters::default();
    if mask.selected_count() == 0 {
        return Ok(SearchOutput {
            hits: Vec::new(),
            counters,
        });
    }
    let kind = index.distance_kind();
    let entry = index.entry();

    // Unfiltered greedy descent; its pops and heuristic mix are not part of
    // the reported exploration profile, but its distance computations are.
    let mut descent = SearchCounters::default();
    let entry_dist = distance_to(source, kind, query, entry, &mut descent.t_dc)?;
    descent.s_dc += 1;
    let seed = Scored::new(entry_dist, entry);
    let upper_req = LayerQuery {
        query,
        seeds: &[seed],
        efs: 1,
        heuristic: Heuristic::OnehopA,
        lf: params.lf,
        ub_onehop: params.ub_onehop,
    };
    let upper = search_layer(index, Layer::Upper, source, &upper_req, MaskView::All, &mut descent)?;
    counters.t_dc = descent.t_dc;
    counters.s_dc = descent.s_dc;
    let lower_seed = upper.first().copied().unwrap_or(seed);

    let lower_req = LayerQuery {
        query,
        seeds: &[lower_seed],
        efs: params.efs,
        heuristic: params.heuristic,
        lf: params.lf,
        ub_onehop: params.ub_onehop,
    };
    let mut hits = search_layer(
        index,
        Layer::Lower,
        source,
        &lower_req,
        MaskView::Bits(mask),
        &mut counters,
    )?;
    hits.truncate(params.k);
    debug_assert!(hits.iter().all(|h| mask.contains(h.node)));
    Ok(SearchOutput { hits, counters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::graph::{IndexParams, TwoLevelGraph};
    use alloc::vec;

    fn line_dataset(xs: &[f32]) -> Dataset {
        Dataset::from_rows(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    fn graph(n: usize, m_lower: usize, edges: &[(u32, &[u32])]) -> TwoLevelGraph {
        let params = IndexParams {
            m_upper: 4,
            m_lower,
            ef_construction: 8,
            sample_rate: 0.25,
            kind: DistanceKind::L2Squared,
            seed: 0,
        };
        let g = TwoLevelGraph::empty(n, params, vec![NodeId(0)]).unwrap();
        for &(v, ns) in edges {
            let ns: Vec<NodeId> = ns.iter().copied().map(NodeId).collect();
            g.set_neighbors(Layer::Lower, NodeId(v), &ns).unwrap();
        }
        g
    }

    fn run_lower(
        g: &TwoLevelGraph,
        d: &Dataset,
        query: &[f32],
        mask: &Semimask,
        heuristic: Heuristic,
        efs: usize,
    ) -> (Vec<Scored>, SearchCounters) {
        let mut counters = SearchCounters::default();
        let entry_dist =
            crate::source::distance_to(d, DistanceKind::L2Squared, query, NodeId(0), &mut 0u64)
                .unwrap();
        let req = LayerQuery {
            query,
            seeds: &[Scored::new(entry_dist, NodeId(0))],
            efs,
            heuristic,
            lf: DEFAULT_LENIENCY,
            ub_onehop: DEFAULT_UB_ONEHOP,
        };
        let out = search_layer(g, Layer::Lower, d, &req, MaskView::Bits(mask), &mut counters)
            .unwrap();
        (out, counters)
    }

    // Star through an unselected hub: c_min -> u (unselected) -> w1..w5.
    // Blind inserts all five with exactly five distance computations.
    #[test]
    fn blind_star_counts() {
        let d = line_dataset(&[0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let g = graph(7, 8, &[(0, &[1]), (1, &[2, 3, 4, 5, 6])]);
        let mask = Semimask::from_fn(7, |i| i != 1);
        let (out, c) = run_lower(&g, &d, &[0.0], &mask, Heuristic::Blind, 10);
        assert_eq!(c.t_dc, 5);
        assert_eq!(c.s_dc, 5);
        let ids: Vec<u32> = out.iter().map(|s| s.node.0).collect();
        assert_eq!(ids, vec![0, 2, 3, 4, 5, 6]);
        assert_eq!(c.hist.blind, c.popped);
    }

    // Two unselected bridges; directed expands the closer one first, blind
    // follows adjacency order. Budget (= m_lower = 2) cuts the second list.
    #[test]
    fn directed_expands_nearest_bridge_first() {
        // x: 0@0, 1@3 (bridge, d=9), 2@2.2 (bridge, d=4.84), 3@10, 4@11, 5@12
        let d = line_dataset(&[0.0, 3.0, 2.2, 10.0, 11.0, 12.0]);
        let g = graph(6, 2, &[(0, &[1, 2]), (1, &[3]), (2, &[4, 5])]);
        let mask = Semimask::from_fn(6, |i| i != 1 && i != 2);
        let (out_d, cd) = run_lower(&g, &d, &[0.0], &mask, Heuristic::Directed, 10);
        let ids: Vec<u32> = out_d.iter().map(|s| s.node.0).collect();
        assert_eq!(ids, vec![0, 4, 5]); // bridge 2 (closer) exhausted the budget
        assert_eq!(cd.t_dc, 4); // bridges 1,2 + nodes 4,5
        assert_eq!(cd.s_dc, 2);

        let (out_b, cb) = run_lower(&g, &d, &[0.0], &mask, Heuristic::Blind, 10);
        let ids: Vec<u32> = out_b.iter().map(|s| s.node.0).collect();
        assert_eq!(ids, vec![0, 3, 4]); // adjacency order, budget hit mid-list
        assert_eq!(cb.t_dc, cb.s_dc); // bridges are never measured
        assert_eq!(cb.t_dc, 2);
    }

    #[test]
    fn onehop_selected_skips_unselected_entirely() {
        let d = line_dataset(&[0.0, 1.0, 2.0]);
        let g = graph(3, 4, &[(0, &[1, 2])]);
        let mask = Semimask::from_fn(3, |i| i == 0);
        let (out, c) = run_lower(&g, &d, &[0.0], &mask, Heuristic::OnehopS, 4);
        assert_eq!(c.t_dc, 0);
        assert_eq!(out.len(), 1); // just the seed
        assert_eq!(c.popped, 1);
    }

    #[test]
    fn onehop_selected_counts_only_selected() {
        // 8 neighbors, 3 of them selected.
        let d = line_dataset(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let g = graph(9, 8, &[(0, &[1, 2, 3, 4, 5, 6, 7, 8])]);
        let mask = Semimask::from_fn(9, |i| i <= 3);
        let (out, c) = run_lower(&g, &d, &[0.0], &mask, Heuristic::OnehopS, 16);
        assert_eq!(c.t_dc, 3);
        assert_eq!(c.s_dc, 3);
        assert_eq!(out.len(), 4);
    }

    #[test]
    fn onehop_all_admits_unselected_to_candidates_only() {
        let d = line_dataset(&[0.0, 1.0, 2.0]);
        let g = graph(3, 4, &[(0, &[1]), (1, &[2])]);
        let mask = Semimask::from_fn(3, |i| i != 1);
        let (out, c) = run_lower(&g, &d, &[0.0], &mask, Heuristic::OnehopA, 4);
        let ids: Vec<u32> = out.iter().map(|s| s.node.0).collect();
        assert_eq!(ids, vec![0, 2]); // reached 2 through unselected 1
        assert_eq!(c.t_dc, 2);
        assert_eq!(c.s_dc, 1);
    }

    #[test]
    fn adaptive_global_full_mask_is_all_onehop_s() {
        let d = line_dataset(&[0.0, 1.0, 2.0, 3.0]);
        let g = graph(4, 4, &[(0, &[1, 2]), (1, &[3])]);
        let mask = Semimask::all(4);
        let (_, c) = run_lower(&g, &d, &[0.0], &mask, Heuristic::AdaptiveGlobal, 8);
        assert!(c.popped > 0);
        assert_eq!(c.hist.onehop_s, c.popped);
        assert_eq!(c.hist.blind + c.hist.directed, 0);
    }

    // σ_l = 4/16 = 0.25 with M = 16, lf = 3: esv = 68 ≥ 48 picks directed.
    #[test]
    fn adaptive_local_picks_directed_at_quarter_selectivity() {
        let xs: Vec<f32> = (0..17).map(|i| i as f32).collect();
        let d = line_dataset(&xs);
        let nbrs: Vec<u32> = (1..17).collect();
        let g = graph(17, 16, &[(0, &nbrs)]);
        let mask = Semimask::from_fn(17, |i| i == 0 || (1..=4).contains(&i));
        let (_, c) = run_lower(&g, &d, &[0.0], &mask, Heuristic::AdaptiveLocal, 32);
        assert!(c.hist.directed >= 1, "first pop must choose directed");
        assert_eq!(c.hist.total(), c.popped);
    }

    #[test]
    fn empty_mask_short_circuits() {
        let d = line_dataset(&[0.0, 1.0]);
        let g = graph(2, 4, &[(0, &[1])]);
        let mask = Semimask::from_fn(2, |_| false);
        let params = SearchParams::new(1, 4, Heuristic::AdaptiveLocal);
        let out = knn_search(&g, &d, &[0.0], &params, &mask).unwrap();
        assert!(out.hits.is_empty());
        assert_eq!(out.counters, SearchCounters::default());
        // The layer search itself also does zero work on an empty mask,
        // even for heuristics that would measure unselected nodes.
        let mut counters = SearchCounters::default();
        let req = LayerQuery {
            query: &[0.0],
            seeds: &[Scored::new(0.0, NodeId(0))],
            efs: 4,
            heuristic: Heuristic::OnehopA,
            lf: DEFAULT_LENIENCY,
            ub_onehop: DEFAULT_UB_ONEHOP,
        };
        let out = search_layer(&g, Layer::Lower, &d, &req, MaskView::Bits(&mask), &mut counters)
            .unwrap();
        assert!(out.is_empty());
        assert_eq!(counters, SearchCounters::default());
    }

    #[test]
    fn invalid_params_are_usage_errors() {
        let d = line_dataset(&[0.0, 1.0]);
        let g = graph(2, 4, &[(0, &[1])]);
        let mask = Semimask::all(2);
        for params in [
            SearchParams { k: 0, efs: 4, heuristic: Heuristic::Blind, lf: 3.0, ub_onehop: 0.5 },
            SearchParams { k: 5, efs: 4, heuristic: Heuristic::Blind, lf: 3.0, ub_onehop: 0.5 },
            SearchParams { k: 1, efs: 4, heuristic: Heuristic::Blind, lf: 0.5, ub_onehop: 0.5 },
            SearchParams { k: 1, efs: 4, heuristic: Heuristic::Blind, lf: 3.0, ub_onehop: 0.0 },
        ] {
            assert!(matches!(
                knn_search(&g, &d, &[0.0], &params, &mask),
                Err(Error::Usage(_))
            ));
        }
    }

    #[test]
    fn knn_search_finds_planted_vector() {
        let d = line_dataset(&[0.0, 1.0, 2.0, 3.0]);
        let g = graph(4, 4, &[(0, &[1]), (1, &[0, 2]), (2, &[1, 3]), (3, &[2])]);
        let mask = Semimask::all(4);
        let params = SearchParams::new(1, 4, Heuristic::OnehopA);
        let out = knn_search(&g, &d, &[2.0], &params, &mask).unwrap();
        assert_eq!(out.hits[0].node, NodeId(2));
        assert_eq!(out.hits[0].dist, Dist(0.0));
    }

    #[test]
    fn unselected_entry_never_in_results() {
        let d = line_dataset(&[0.0, 1.0, 2.0]);
        let g = graph(3, 4, &[(0, &[1]), (1, &[2])]);
        let mask = Semimask::from_fn(3, |i| i == 2);
        let params = SearchParams::new(2, 4, Heuristic::OnehopA);
        let out = knn_search(&g, &d, &[0.0], &params, &mask).unwrap();
        let ids: Vec<u32> = out.hits.iter().map(|s| s.node.0).collect();
        assert_eq!(ids, vec![2]);
    }
}
