//! Predicate evaluation into a semimask, done once before any search.
//!
//! A semimask is a bitset over node ids marking the selected subset `S`.
//! The search engine never evaluates predicates or filters result streams;
//! it only tests semimask bits, so the selection step here is the one and
//! only place filtering happens.

use alloc::format;

use crate::bitset::Bitset;
use crate::dataset::{Dataset, NodeId};
use crate::error::Error;
use crate::sampling::sample_exact;
use crate::Result;

/// Selection predicate over dataset attributes.
///
/// `Mask` carries an externally computed bitset (e.g. read from a mask
/// file), which is how arbitrary selection subqueries plug in without the
/// engine knowing a query language.
#[derive(Debug, Clone)]
pub enum Predicate {
    All,
    IdLessThan(u64),
    /// Inclusive on both ends.
    IdRange(u64, u64),
    LabelEquals(u32),
    /// Exactly `floor(rate * n)` nodes, uniform, deterministic per seed.
    RandomSample { rate: f64, seed: u64 },
    Mask(Semimask),
}

/// Immutable bitset over node ids with its popcount cached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Semimask {
    bits: Bitset,
    selected: usize,
}

impl Semimask {
    pub fn from_bitset(bits: Bitset) -> Self {
        let selected = bits.count_ones();
        Semimask { bits, selected }
    }

    pub fn from_fn(n: usize, mut pred: impl FnMut(usize) -> bool) -> Self {
        let mut bits = Bitset::new(n);
        for i in 0..n {
            if pred(i) {
                bits.set(i);
            }
        }
        Semimask::from_bitset(bits)
    }

    /// Mask selecting every node.
    pub fn all(n: usize) -> Self {
        Semimask::from_fn(n, |_| true)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn contains(&self, v: NodeId) -> bool {
        self.bits.test(v.index())
    }

    pub fn selected_count(&self) -> usize {
        self.selected
    }

    pub fn bits(&self) -> &Bitset {
        &self.bits
    }

    /// Global selectivity `σ_g = |S| / |V|`.
    pub fn global_selectivity(&self) -> f64 {
        if self.bits.len() == 0 {
            return 0.0;
        }
        self.selected as f64 / self.bits.len() as f64
    }

    /// Local selectivity of a neighbor list: the selected fraction of`nbrs`.
    ///
    /// Costs only bit tests — no distance computations, no predicate
    /// evaluation. An empty list is defined as 0 so that a degree-0
    /// candidate routes to a 2-hop-capable heuristic.
    pub fn local_selectivity(&self, nbrs: &[NodeId]) -> f64 {
        if nbrs.is_empty() {
            return 0.0;
        }
        let hit = nbrs.iter().filter(|&&v| self.contains(v)).count();
        hit as f64 / nbrs.len() as f64
    }
}

/// Evaluates `pred` over the dataset attributes into a semimask.
pub fn evaluate(pred: &Predicate, dataset: &Dataset) -> Result<Semimask> {
    let n = dataset.len();
    match pred {
        Predicate::All => Ok(Semimask::all(n)),
        Predicate::IdLessThan(t) => Ok(Semimask::from_fn(n, |i| {
            dataset.attrs(NodeId(i as u32)).id < *t
        })),
        Predicate::IdRange(lo, hi) => {
            if lo > hi {
                return Err(Error::usage(format!("id range {lo}..={hi} is inverted")));
            }
            Ok(Semimask::from_fn(n, |i| {
                let id = dataset.attrs(NodeId(i as u32)).id;
                *lo <= id && id <= *hi
            }))
        }
        Predicate::LabelEquals(l) => Ok(Semimask::from_fn(n, |i| {
            dataset.attrs(NodeId(i as u32)).label == *l
        })),
        Predicate::RandomSample { rate, seed } => {
            if !(0.0..=1.0).contains(rate) {
                return Err(Error::usage(format!("sample rate {rate} outside [0, 1]")));
            }
            let count = libm::floor(rate * n as f64) as usize;
            let mut bits = Bitset::new(n);
            for id in sample_exact(n, count, *seed) {
                bits.set(id as usize);
            }
            Ok(Semimask::from_bitset(bits))
        }
        Predicate::Mask(mask) => {
            if mask.len() != n {
                return Err(Error::format(format!(
                    "mask length {} does not match dataset size {n}",
                    mask.len()
                )));
            }
            Ok(mask.clone())
        }
    }
}
