//! Predicate-agnostic filtered approximate-kNN over a two-level HNSW graph.
//!
//! The index is a degree-bounded proximity graph with two layers: a lower
//! layer over every vector and a small sampled upper layer used only to find
//! a good entry point. Filtering is done entirely up front: a selection
//! predicate is evaluated once into a [`Semimask`] bitset and the search
//! never filters again, it only tests bits. The search itself is the classic
//! beam search with the candidate-exploration step swapped out for one of a
//! family of heuristics (`onehop-a`, `onehop-s`, `blind`, `directed`) or an
//! adaptive chooser that picks among them per query or per candidate.
//!
//! This crate is the algorithmic core and is `no_std` + `alloc` apart from
//! the optional `std` feature, which adds the multi-threaded build driver.
//! Disk formats, the paged reader, workload generation, and the CLI live in
//! the companion `nvx` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bitset;
pub mod build;
pub mod dataset;
pub mod dist;
pub mod error;
pub mod graph;
pub mod heuristic;
pub mod oracle;
pub mod prefilter;
pub mod sampling;
pub mod search;
pub mod source;

pub use bitset::Bitset;
#[cfg(feature = "std")]
pub use build::build;
pub use build::{BuildParams, GraphBuilder};
pub use dataset::{Dataset, NodeAttrs, NodeId};
pub use dist::{cosine_distance, distance, l2_squared, Dist, DistanceKind, DistanceSink};
pub use error::Error;
pub use graph::{AdjacencyStore, IndexParams, Layer, SearchIndex, TwoLevelGraph};
pub use heuristic::{choose_fixed, esv, FixedChoice, Heuristic};
pub use oracle::{brute_force_knn, recall, GroundTruth};
pub use prefilter::{evaluate, Predicate, Semimask};
pub use search::{
    knn_search, search_layer, MaskView, Scored, SearchCounters, SearchOutput, SearchParams,
};
pub use source::{RowView, VectorSource};

/// Crate-wide result alias.
pub type Result<T, E = Error> = core::result::Result<T, E>;
