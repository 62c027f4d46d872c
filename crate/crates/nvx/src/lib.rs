//! IO, persistence, workloads, and benchmarking around `nvx-core`.
//!
//! The core crate owns the graph, the filtered search heuristics, and the
//! exact oracle; this crate adds everything that touches the outside
//! world: fvecs and mask/ground-truth files, the paged on-disk index with
//! pin accounting, synthetic workload generation with controllable
//! query/selection correlation, the recall-targeted efs autotuner, the
//! sweep harness, and the `nvx` command-line tool.

pub mod bench;
pub mod cli;
pub mod error;
pub mod fvecs;
pub mod gt_file;
pub mod maskfile;
pub mod pager;
pub mod persist;
pub mod pred;
pub mod synth;

pub use bench::{autotune_efs, run_sweep, BenchRow, QueryCase, TuneOutcome, TuneResult};
pub use error::{Error, Result};
pub use pager::{PagedFile, StoreCounters, PAGE_SIZE};
pub use persist::{persist, IndexManifest, PagedIndex};
pub use synth::{
    correlation_ce, gen_correlated_mask, gen_queries, gen_synthetic, Correlation, SynthSpec,
    WorkloadSpec,
};
