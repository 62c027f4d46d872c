//! Recall-targeted efs tuning and the sweep harness that produces CSV rows.
//!
//! The tuning protocol: evaluate mean recall over the query set at the
//! minimum beam (`efs = k`); if it already meets the target, use it.
//! Otherwise double the beam until the target is met (capped at
//! [`EFS_MAX`]) and binary-search the smallest beam that still meets it.
//! A point that cannot reach the target even at the cap is marked FAILED
//! and reported with its best achieved recall — the cross marks in plots.
//!
//! A sweep measures, per (heuristic, selectivity) point: the prefilter
//! time (mask construction), the tuned recall, search latency over
//! `repeats` timed runs per query (after one warm-up run, unless cold mode
//! flushes the page cache before every run), distance-computation
//! counters, and page-cache pins/misses.

use std::collections::HashMap;
use std::io::Write;
use std::time::Instant;

use nvx_core::{
    brute_force_knn, knn_search, recall, Dataset, GroundTruth, Heuristic, MaskView, NodeId,
    SearchCounters, SearchIndex, SearchParams, Semimask, VectorSource,
};

use crate::error::{Error, Result};
use crate::pager::StoreCounters;
use crate::persist::PagedIndex;
use crate::synth::{gen_correlated_mask, Correlation, WorkloadSpec};

/// Tuning gives up past this beam width.
pub const EFS_MAX: usize = 1000;

/// One query of a sweep point: its mask, exact truth, and prefilter cost.
#[derive(Debug, Clone)]
pub struct QueryCase {
    pub query: Vec<f32>,
    pub mask: Semimask,
    pub truth: GroundTruth,
    pub prefilter_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TuneOutcome {
    Tuned { efs: usize, recall: f64 },
    Failed { best_recall: f64 },
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    pub outcome: TuneOutcome,
    /// Every `(efs, mean recall)` evaluated, in evaluation order.
    pub scan: Vec<(usize, f64)>,
}

fn mean_recall<I: SearchIndex, S: VectorSource>(
    index: &I,
    source: &S,
    cases: &[QueryCase],
    params: &SearchParams,
) -> Result<f64> {
    let mut total = 0.0;
    for case in cases {
        let out = knn_search(index, source, &case.query, params, &case.mask)?;
        let ids: Vec<NodeId> = out.hits.iter().map(|s| s.node).collect();
        total += recall(&ids, &case.truth);
    }
    Ok(total / cases.len() as f64)
}

/// Finds the smallest beam in `[k, EFS_MAX]` whose mean recall meets
/// `target` (doubling scan, then binary search). `tol` is the acceptance
/// band `[target, target + tol]` used by consumers of the result; when the
/// minimum beam already meets the target (even beyond the band) it is
/// returned as-is with its achieved recall.
pub fn autotune_efs<I: SearchIndex, S: VectorSource>(
    index: &I,
    source: &S,
    cases: &[QueryCase],
    k: usize,
    heuristic: Heuristic,
    target: f64,
    tol: f64,
) -> Result<TuneResult> {
    if cases.is_empty() {
        return Err(Error::usage("autotune needs at least one query"));
    }
    if !(target > 0.0 && target <= 1.0) || tol < 0.0 {
        return Err(Error::usage("target recall must be in (0, 1] and tol >= 0"));
    }
    let mut cache: HashMap<usize, f64> = HashMap::new();
    let mut scan: Vec<(usize, f64)> = Vec::new();
    let mut eval = |efs: usize, scan: &mut Vec<(usize, f64)>| -> Result<f64> {
        if let Some(&r) = cache.get(&efs) {
            return Ok(r);
        }
        let params = SearchParams::new(k, efs, heuristic);
        let r = mean_recall(index, source, cases, &params)?;
        cache.insert(efs, r);
        scan.push((efs, r));
        Ok(r)
    };

    let r_min = eval(k, &mut scan)?;
    if r_min >= target {
        return Ok(TuneResult {
            outcome: TuneOutcome::Tuned {
                efs: k,
                recall: r_min,
            },
            scan,
        });
    }
    let mut lo = k;
    let mut hi = None;
    let mut e = k;
    while e < EFS_MAX {
        e = (e * 2).min(EFS_MAX);
        let r = eval(e, &mut scan)?;
        if r >= target {
            hi = Some(e);
            break;
        }
        lo = e;
    }
    let Some(mut hi) = hi else {
        let best = scan.iter().map(|&(_, r)| r).fold(0.0, f64::max);
        return Ok(TuneResult {
            outcome: TuneOutcome::Failed { best_recall: best },
            scan,
        });
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if eval(mid, &mut scan)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let achieved = eval(hi, &mut scan)?;
    Ok(TuneResult {
        outcome: TuneOutcome::Tuned {
            efs: hi,
            recall: achieved,
        },
        scan,
    })
}

/// Cache instrumentation a sweep can read; in-memory indexes report zeros.
pub trait Instrumented {
    fn cache_counters(&self) -> StoreCounters {
        StoreCounters::default()
    }
    fn flush_cache_all(&self) -> Result<()> {
        Ok(())
    }
    /// Identifier embedded in CSV output for provenance.
    fn provenance(&self) -> String {
        String::new()
    }
}

impl Instrumented for PagedIndex {
    fn cache_counters(&self) -> StoreCounters {
        PagedIndex::cache_counters(self)
    }
    fn flush_cache_all(&self) -> Result<()> {
        PagedIndex::flush_cache(self)
    }
    fn provenance(&self) -> String {
        self.manifest().short_id()
    }
}

impl Instrumented for nvx_core::TwoLevelGraph {}

/// One output row; the CSV column set is fixed.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub dataset: String,
    pub heuristic: Heuristic,
    pub sigma: f64,
    pub corr: Correlation,
    /// Tuned beam width, or `FAILED` when the target is unreachable.
    pub efs: String,
    pub recall: f64,
    pub lat_mean_us: f64,
    pub lat_median_us: f64,
    pub prefilter_us: f64,
    pub t_dc: f64,
    pub s_dc: f64,
    pub popped: f64,
    pub pins: f64,
    pub misses: f64,
    pub hist_onehop_s: f64,
    pub hist_blind: f64,
    pub hist_directed: f64,
    /// Not a CSV column: the tuning trace, for monotonicity analysis.
    pub scan: Vec<(usize, f64)>,
}

pub const CSV_HEADER: &str = "dataset,heuristic,sigma,corr,efs,recall,lat_mean_us,lat_median_us,\
prefilter_us,t_dc,s_dc,popped,pins,misses,hist_onehop_s,hist_blind,hist_directed";

impl BenchRow {
    pub fn failed(&self) -> bool {
        self.efs == "FAILED"
    }

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:.4},{:.1},{:.1},{:.1},{:.1},{:.1},{:.1},{:.1},{:.1},{:.1},{:.1},{:.1}",
            self.dataset,
            self.heuristic,
            self.sigma,
            self.corr.as_str(),
            self.efs,
            self.recall,
            self.lat_mean_us,
            self.lat_median_us,
            self.prefilter_us,
            self.t_dc,
            self.s_dc,
            self.popped,
            self.pins,
            self.misses,
            self.hist_onehop_s,
            self.hist_blind,
            self.hist_directed,
        )
    }
}

/// Sweep knobs beyond what the workload spec carries.
#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub dataset_name: String,
    /// Timed runs per query after the warm-up run.
    pub repeats: usize,
    /// Skip warm-up and flush the page cache before every timed run.
    pub cold: bool,
    /// Acceptance band above the recall target.
    pub tol: f64,
    /// Workers for ground-truth computation; timing stays single-threaded.
    pub threads: usize,
    pub lf: f64,
    pub ub_onehop: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            dataset_name: "dataset".into(),
            repeats: 5,
            cold: false,
            tol: 0.01,
            threads: 1,
            lf: nvx_core::search::DEFAULT_LENIENCY,
            ub_onehop: nvx_core::search::DEFAULT_UB_ONEHOP,
        }
    }
}

/// Builds the per-query cases of one sweep point: mask (timed), truth.
/// A fixed mask (external semimask) replaces per-point mask generation;
/// `threads` parallelizes the oracle scans across queries.
#[allow(clippy::too_many_arguments)]
pub fn build_cases(
    dataset: &Dataset,
    kind: nvx_core::DistanceKind,
    queries: &[Vec<f32>],
    sigma: f64,
    corr: Correlation,
    k: usize,
    seed: u64,
    fixed_mask: Option<&Semimask>,
    gt: Option<&[GroundTruth]>,
    threads: usize,
) -> Result<Vec<QueryCase>> {
    let one = |qi: usize, q: &[f32]| -> Result<QueryCase> {
        let t0 = Instant::now();
        let mask = match fixed_mask {
            Some(m) => m.clone(),
            None => gen_correlated_mask(dataset, kind, q, sigma, corr, seed)?,
        };
        let prefilter_us = t0.elapsed().as_secs_f64() * 1e6;
        let truth = match gt {
            Some(rows) => rows
                .get(qi)
                .cloned()
                .ok_or_else(|| Error::usage("ground-truth file has fewer rows than queries"))?,
            None => brute_force_knn(dataset, kind, q, MaskView::Bits(&mask), k)?,
        };
        Ok(QueryCase {
            query: q.to_vec(),
            mask,
            truth,
            prefilter_us,
        })
    };
    if threads <= 1 || queries.len() < 2 {
        return queries.iter().enumerate().map(|(qi, q)| one(qi, q)).collect();
    }
    let mut slots: Vec<Option<Result<QueryCase>>> = (0..queries.len()).map(|_| None).collect();
    let chunk = queries.len().div_ceil(threads);
    std::thread::scope(|s| {
        for (ci, out) in slots.chunks_mut(chunk).enumerate() {
            let one = &one;
            s.spawn(move || {
                for (off, slot) in out.iter_mut().enumerate() {
                    let qi = ci * chunk + off;
                    *slot = Some(one(qi, &queries[qi]));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.expect("filled")).collect()
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Runs the full sweep: every selectivity of the workload crossed with
/// every heuristic. Ground truth comes from the exact oracle, unless a
/// fixed external mask is supplied, in which case the sweep collapses to
/// that one selection (its own selectivity is reported) and `gt_override`
/// rows may stand in for the oracle.
pub fn run_sweep<I, S>(
    index: &I,
    source: &S,
    dataset: &Dataset,
    queries: &[Vec<f32>],
    spec: &WorkloadSpec,
    heuristics: &[Heuristic],
    opts: &SweepOptions,
    fixed_mask: Option<&Semimask>,
    gt_override: Option<&[GroundTruth]>,
) -> Result<Vec<BenchRow>>
where
    I: SearchIndex + Instrumented,
    S: VectorSource,
{
    spec.validate()?;
    if queries.is_empty() {
        return Err(Error::usage("sweep needs at least one query"));
    }
    if gt_override.is_some() && fixed_mask.is_none() {
        return Err(Error::usage(
            "a ground-truth file needs the fixed mask it was computed under",
        ));
    }
    let kind = index.distance_kind();
    let sigmas: Vec<f64> = match fixed_mask {
        Some(m) => vec![m.global_selectivity()],
        None => spec.selectivities.clone(),
    };
    let mut rows = Vec::new();
    for (si, &sigma) in sigmas.iter().enumerate() {
        let mask_seed = spec.seed.wrapping_add(si as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let cases = build_cases(
            dataset,
            kind,
            queries,
            sigma,
            spec.correlation,
            spec.k,
            mask_seed,
            fixed_mask,
            gt_override,
            opts.threads,
        )?;
        for &h in heuristics {
            let tune = autotune_efs(index, source, &cases, spec.k, h, spec.target_recall, opts.tol)?;
            let (efs_label, efs_run, point_recall) = match tune.outcome {
                TuneOutcome::Tuned { efs, recall } => (efs.to_string(), efs, recall),
                TuneOutcome::Failed { best_recall } => ("FAILED".into(), EFS_MAX, best_recall),
            };
            let params = SearchParams {
                k: spec.k,
                efs: efs_run,
                heuristic: h,
                lf: opts.lf,
                ub_onehop: opts.ub_onehop,
            };
            let mut per_query_lat = Vec::with_capacity(cases.len());
            let mut counters_sum = SearchCounters::default();
            let mut pins_sum = 0.0;
            let mut misses_sum = 0.0;
            let mut runs: f64 = 0.0;
            for case in &cases {
                if !opts.cold {
                    knn_search(index, source, &case.query, &params, &case.mask)?;
                }
                let mut lat = 0.0;
                let mut last = SearchCounters::default();
                for _ in 0..opts.repeats.max(1) {
                    if opts.cold {
                        index.flush_cache_all()?;
                    }
                    let before = index.cache_counters();
                    let t0 = Instant::now();
                    let out = knn_search(index, source, &case.query, &params, &case.mask)?;
                    lat += t0.elapsed().as_secs_f64() * 1e6;
                    let after = index.cache_counters();
                    pins_sum += (after.pins - before.pins) as f64;
                    misses_sum += (after.misses - before.misses) as f64;
                    runs += 1.0;
                    last = out.counters;
                }
                per_query_lat.push(lat / opts.repeats.max(1) as f64);
                counters_sum.merge(&last);
            }
            let nq = cases.len() as f64;
            let lat_mean = per_query_lat.iter().sum::<f64>() / nq;
            let lat_median = median(&mut per_query_lat);
            rows.push(BenchRow {
                dataset: opts.dataset_name.clone(),
                heuristic: h,
                sigma,
                corr: spec.correlation,
                efs: efs_label,
                recall: point_recall,
                lat_mean_us: lat_mean,
                lat_median_us: lat_median,
                prefilter_us: cases.iter().map(|c| c.prefilter_us).sum::<f64>() / nq,
                t_dc: counters_sum.t_dc as f64 / nq,
                s_dc: counters_sum.s_dc as f64 / nq,
                popped: counters_sum.popped as f64 / nq,
                pins: pins_sum / runs.max(1.0),
                misses: misses_sum / runs.max(1.0),
                hist_onehop_s: counters_sum.hist.onehop_s as f64 / nq,
                hist_blind: counters_sum.hist.blind as f64 / nq,
                hist_directed: counters_sum.hist.directed as f64 / nq,
                scan: tune.scan,
            });
        }
    }
    Ok(rows)
}

/// Emits the fixed-column CSV, preceded by a provenance comment when the
/// index carries one.
pub fn emit_csv(rows: &[BenchRow], provenance: &str, out: &mut dyn Write) -> Result<()> {
    let io = |e: std::io::Error| Error::format(format!("csv write: {e}"));
    if !provenance.is_empty() {
        writeln!(out, "# index={provenance}").map_err(io)?;
    }
    writeln!(out, "{CSV_HEADER}").map_err(io)?;
    for r in rows {
        writeln!(out, "{}", r.csv()).map_err(io)?;
    }
    Ok(())
}
