//! Command-line front end: build and persist indexes, generate datasets,
//! masks, and ground truth, run single queries, and sweep benchmarks.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use nvx_core::{
    brute_force_knn, build, knn_search, BuildParams, Dataset, DistanceKind, Heuristic, Layer,
    MaskView, NodeId, SearchIndex, SearchParams, Semimask, TwoLevelGraph, VectorSource,
};

use crate::bench::{emit_csv, run_sweep, SweepOptions};
use crate::error::{Error, Result};
use crate::fvecs;
use crate::gt_file;
use crate::maskfile;
use crate::persist::{persist, PagedIndex};
use crate::pred::parse_pred;
use crate::synth::{gen_queries, gen_synthetic, Correlation, SynthSpec, WorkloadSpec};

const DEFAULT_PAGE_BUDGET: u64 = 1 << 30;

#[derive(Parser)]
#[command(
    name = "nvx",
    about = "Filtered approximate kNN over a two-level proximity graph",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic Gaussian-mixture dataset (fvecs + sidecars).
    Gen(GenArgs),
    /// Build an index from a dataset and persist it to a directory.
    Build(BuildArgs),
    /// Verify an index directory and re-persist it elsewhere.
    Persist(PersistArgs),
    /// Evaluate a predicate into a mask file.
    Mask(MaskArgs),
    /// Compute exact ground truth for a query set.
    Gt(GtArgs),
    /// Run a single filtered query and print hits and counters.
    Query(QueryArgs),
    /// Sweep selectivities and heuristics; emit CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20000)]
    n: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 16)]
    clusters: usize,
    #[arg(long, default_value_t = 0.05)]
    spread: f32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    index_dir: PathBuf,
    /// Upper-layer degree bound M (the lower layer gets 2M by default).
    #[arg(long, default_value_t = 16)]
    m: usize,
    #[arg(long)]
    m_lower: Option<usize>,
    #[arg(long, default_value_t = 100)]
    efc: usize,
    #[arg(long, default_value_t = 0.05)]
    sample_rate: f64,
    #[arg(long, default_value = "l2")]
    metric: String,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PersistArgs {
    #[arg(long)]
    index_dir: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MaskArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    pred: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GtArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    pred: Option<String>,
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value = "l2")]
    metric: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    index_dir: PathBuf,
    /// Inline query vector: comma-separated floats.
    #[arg(long)]
    query: Option<String>,
    /// fvecs file of query vectors; picked by --qi.
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    qi: usize,
    /// Dataset path (only needed for label predicates).
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    pred: Option<String>,
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long)]
    efs: Option<usize>,
    #[arg(long, default_value = "adaptive-l")]
    heuristic: String,
    #[arg(long, default_value_t = DEFAULT_PAGE_BUDGET)]
    page_budget: u64,
    #[arg(long, default_value_t = false)]
    cache_vectors: bool,
    #[arg(long, default_value_t = 3.0)]
    lf: f64,
    #[arg(long, default_value_t = 0.5)]
    ub_onehop: f64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    index_dir: PathBuf,
    /// Dataset path; enables label predicates and the query generator.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Query vectors (fvecs). Without it, queries are generated from the
    /// dataset's synthetic metadata sidecar.
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    query_count: usize,
    /// Comma-separated heuristics to sweep.
    #[arg(long, alias = "heuristic", default_value = "adaptive-l")]
    heuristics: String,
    /// Comma-separated selectivity fractions.
    #[arg(long, default_value = "0.01,0.05,0.1,0.3,0.5,0.9,1.0")]
    selectivities: String,
    /// Fixed external mask file; replaces the selectivity axis.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Fixed predicate; replaces the selectivity axis.
    #[arg(long)]
    pred: Option<String>,
    #[arg(long, default_value = "un")]
    correlation: String,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0.95)]
    target_recall: f64,
    #[arg(long, default_value_t = 0.01)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_PAGE_BUDGET)]
    page_budget: u64,
    #[arg(long, default_value_t = false)]
    cold: bool,
    #[arg(long, default_value_t = false)]
    cache_vectors: bool,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Workers for ground-truth computation (timing stays single-threaded).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Workload spec (JSON); overrides the sweep flags above.
    #[arg(long)]
    workload: Option<PathBuf>,
    /// Ground-truth file (single-selectivity sweeps only).
    #[arg(long)]
    gt: Option<PathBuf>,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 3.0)]
    lf: f64,
    #[arg(long, default_value_t = 0.5)]
    ub_onehop: f64,
}

/// Entry point returning the process exit code: 0 success, 1 runtime
/// failure, 2 usage error.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Build(a) => cmd_build(a),
        Cmd::Persist(a) => cmd_persist(a),
        Cmd::Mask(a) => cmd_mask(a),
        Cmd::Gt(a) => cmd_gt(a),
        Cmd::Query(a) => cmd_query(a),
        Cmd::Bench(a) => cmd_bench(a),
    }
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let spec = SynthSpec {
        n: a.n,
        dim: a.dim,
        clusters: a.clusters,
        spread: a.spread,
        seed: a.seed,
    };
    let dataset = gen_synthetic(&spec)?;
    fvecs::write_fvecs(&a.out, &dataset)?;
    let meta = fvecs::meta_sidecar(&a.out);
    let json = serde_json::to_string_pretty(&spec)
        .map_err(|e| Error::format(format!("meta serialization: {e}")))?;
    fs::write(&meta, json).map_err(|e| Error::io(&meta, e))?;
    println!(
        "wrote {} vectors of dim {} to {} (labels + meta sidecars)",
        a.n,
        a.dim,
        a.out.display()
    );
    Ok(())
}

fn cmd_build(a: BuildArgs) -> Result<()> {
    let dataset = fvecs::load_fvecs(&a.dataset)?;
    let kind = DistanceKind::parse(&a.metric)?;
    let mut params = BuildParams::new(a.m, kind);
    if let Some(ml) = a.m_lower {
        params.m_lower = ml;
    }
    params.ef_construction = a.efc.max(params.m_lower);
    params.sample_rate = a.sample_rate;
    params.threads = a.threads;
    params.seed = a.seed;
    let t0 = Instant::now();
    let graph = build(&dataset, &params)?;
    let build_s = t0.elapsed().as_secs_f64();
    persist(&graph, &dataset, &a.index_dir)?;
    println!(
        "built {} nodes ({} upper) in {:.1}s, entry {}, persisted to {}",
        dataset.len(),
        graph.upper_members().len(),
        build_s,
        graph.entry(),
        a.index_dir.display()
    );
    Ok(())
}

/// Loads a persisted index fully into memory as (graph, dataset).
fn materialize(dir: &Path) -> Result<(TwoLevelGraph, Dataset)> {
    let idx = PagedIndex::open(dir, DEFAULT_PAGE_BUDGET, true)?;
    let dataset = idx.dataset()?;
    let params = idx.index_params();
    let members: Vec<NodeId> = {
        // Recover membership from the upper layer by probing each node.
        let mut out = Vec::new();
        let mut buf = Vec::new();
        for i in 0..idx.node_count() {
            let v = NodeId(i as u32);
            if idx.neighbors_into(Layer::Upper, v, &mut buf).is_ok() {
                out.push(v);
            }
        }
        out
    };
    let graph = TwoLevelGraph::empty(idx.node_count(), params, members)?;
    let mut buf = Vec::new();
    for i in 0..idx.node_count() {
        let v = NodeId(i as u32);
        idx.neighbors_into(Layer::Lower, v, &mut buf)?;
        graph.set_neighbors(Layer::Lower, v, &buf)?;
    }
    for &v in graph.upper_members().to_vec().iter() {
        idx.neighbors_into(Layer::Upper, v, &mut buf)?;
        graph.set_neighbors(Layer::Upper, v, &buf)?;
    }
    Ok((graph, dataset))
}

fn cmd_persist(a: PersistArgs) -> Result<()> {
    let (graph, dataset) = materialize(&a.index_dir)?;
    persist(&graph, &dataset, &a.out)?;
    println!(
        "verified {} and re-persisted to {}",
        a.index_dir.display(),
        a.out.display()
    );
    Ok(())
}

fn cmd_mask(a: MaskArgs) -> Result<()> {
    let dataset = fvecs::load_fvecs(&a.dataset)?;
    let pred = parse_pred(&a.pred, dataset.len())?;
    let mask = nvx_core::evaluate(&pred, &dataset)?;
    maskfile::write_mask(&a.out, &mask)?;
    println!(
        "mask over {} nodes: {} selected (sigma {:.4}) -> {}",
        mask.len(),
        mask.selected_count(),
        mask.global_selectivity(),
        a.out.display()
    );
    Ok(())
}

fn resolve_mask(
    pred: &Option<String>,
    mask_path: &Option<PathBuf>,
    dataset: &Dataset,
) -> Result<Semimask> {
    match (pred, mask_path) {
        (Some(_), Some(_)) => Err(Error::usage("give either --pred or --mask, not both")),
        (Some(p), None) => {
            let pred = parse_pred(p, dataset.len())?;
            Ok(nvx_core::evaluate(&pred, dataset)?)
        }
        (None, Some(path)) => {
            let mask = maskfile::read_mask(path)?;
            if mask.len() != dataset.len() {
                return Err(Error::format(format!(
                    "mask covers {} nodes, dataset has {}",
                    mask.len(),
                    dataset.len()
                )));
            }
            Ok(mask)
        }
        (None, None) => Ok(Semimask::all(dataset.len())),
    }
}

fn cmd_gt(a: GtArgs) -> Result<()> {
    let dataset = fvecs::load_fvecs(&a.dataset)?;
    let queries = fvecs::load_query_fvecs(&a.queries)?;
    let kind = DistanceKind::parse(&a.metric)?;
    let mask = resolve_mask(&a.pred, &a.mask, &dataset)?;
    let mut rows = Vec::with_capacity(queries.len());
    for q in &queries {
        let truth = brute_force_knn(&dataset, kind, q, MaskView::Bits(&mask), a.k)?;
        rows.push(truth.into_iter().map(|s| s.node).collect::<Vec<_>>());
    }
    gt_file::write_gt(&a.out, &rows)?;
    println!(
        "ground truth for {} queries (k={}) -> {}",
        rows.len(),
        a.k,
        a.out.display()
    );
    Ok(())
}

fn cmd_query(a: QueryArgs) -> Result<()> {
    let index = PagedIndex::open(&a.index_dir, a.page_budget, a.cache_vectors)?;
    let query: Vec<f32> = match (&a.query, &a.queries) {
        (Some(s), None) => s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f32>()
                    .map_err(|_| Error::usage(format!("bad query component '{t}'")))
            })
            .collect::<Result<_>>()?,
        (None, Some(path)) => {
            let qs = fvecs::load_query_fvecs(path)?;
            qs.get(a.qi)
                .cloned()
                .ok_or_else(|| Error::usage(format!("--qi {} out of range", a.qi)))?
        }
        _ => return Err(Error::usage("give exactly one of --query or --queries")),
    };
    let attrs_dataset = match &a.dataset {
        Some(p) => fvecs::load_fvecs(p)?,
        None => index.dataset()?,
    };
    if attrs_dataset.len() != index.node_count() {
        return Err(Error::format(
            "dataset size does not match the index",
        ));
    }
    let mask = resolve_mask(&a.pred, &a.mask, &attrs_dataset)?;
    let heuristic = Heuristic::parse(&a.heuristic)?;
    let efs = a.efs.unwrap_or_else(|| a.k.max(100));
    let params = SearchParams {
        k: a.k,
        efs: efs.max(a.k),
        heuristic,
        lf: a.lf,
        ub_onehop: a.ub_onehop,
    };
    let out = knn_search(&index, &index, &query, &params, &mask)?;
    if out.hits.len() < a.k {
        eprintln!(
            "warning: only {} of {} requested results are reachable in the selection ({} selected)",
            out.hits.len(),
            a.k,
            mask.selected_count()
        );
    }
    for (rank, hit) in out.hits.iter().enumerate() {
        println!("{rank}\t{}\t{:.6}", hit.node, hit.dist.0);
    }
    let c = out.counters;
    let cache = index.cache_counters();
    println!(
        "# t_dc={} s_dc={} popped={} hist_onehop_s={} hist_blind={} hist_directed={} pins={} misses={}",
        c.t_dc,
        c.s_dc,
        c.popped,
        c.hist.onehop_s,
        c.hist.blind,
        c.hist.directed,
        cache.pins,
        cache.misses
    );
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|_| Error::usage(format!("bad {what} '{t}'")))
        })
        .collect()
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let index = PagedIndex::open(&a.index_dir, a.page_budget, a.cache_vectors)?;
    let dataset = match &a.dataset {
        Some(p) => {
            let d = fvecs::load_fvecs(p)?;
            if d.len() != index.node_count() || d.dim() != VectorSource::dim(&index) {
                return Err(Error::format(
                    "dataset does not match the index (size or dim)",
                ));
            }
            d
        }
        None => index.dataset()?,
    };

    let spec = match &a.workload {
        Some(path) => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            let spec: WorkloadSpec = serde_json::from_slice(&bytes)
                .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
            spec
        }
        None => WorkloadSpec {
            selectivities: parse_list(&a.selectivities, "selectivity")?,
            correlation: Correlation::parse(&a.correlation)?,
            query_count: a.query_count,
            k: a.k,
            target_recall: a.target_recall,
            seed: a.seed,
        },
    };
    spec.validate()?;

    let queries: Vec<Vec<f32>> = match &a.queries {
        Some(path) => {
            let qs = fvecs::load_query_fvecs(path)?;
            qs.into_iter().take(spec.query_count).collect()
        }
        None => {
            let meta_path = a
                .dataset
                .as_ref()
                .map(|p| fvecs::meta_sidecar(p))
                .filter(|p| p.exists())
                .ok_or_else(|| {
                    Error::usage(
                        "no --queries given and no synthetic metadata sidecar found; \
                         pass --queries or --dataset generated by `nvx gen`",
                    )
                })?;
            let bytes = fs::read(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
            let synth: SynthSpec = serde_json::from_slice(&bytes)
                .map_err(|e| Error::format(format!("{}: {e}", meta_path.display())))?;
            gen_queries(&dataset, &synth, spec.correlation, spec.query_count, spec.seed)?
        }
    };
    if queries.is_empty() {
        return Err(Error::usage("query set is empty"));
    }

    let fixed_mask = match (&a.pred, &a.mask) {
        (None, None) => None,
        (pred, mask) => Some(resolve_mask(pred, mask, &dataset)?),
    };
    let gt_rows = match &a.gt {
        Some(path) => {
            if fixed_mask.is_none() {
                return Err(Error::usage(
                    "--gt needs the fixed --mask/--pred it was computed under",
                ));
            }
            let (k, rows) = gt_file::read_gt(path)?;
            if k != spec.k {
                return Err(Error::usage(format!(
                    "ground-truth k={k} does not match --k {}",
                    spec.k
                )));
            }
            // Re-hydrate distances lazily: recall only needs ids.
            Some(
                rows.into_iter()
                    .map(|r| r.into_iter().map(|id| nvx_core::Scored::new(0.0, id)).collect())
                    .collect::<Vec<_>>(),
            )
        }
        None => None,
    };

    let heuristics: Vec<Heuristic> = a
        .heuristics
        .split(',')
        .map(|h| Heuristic::parse(h.trim()).map_err(Error::from))
        .collect::<Result<_>>()?;
    let opts = SweepOptions {
        dataset_name: a
            .dataset
            .as_ref()
            .and_then(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "index".into()),
        repeats: a.repeats,
        cold: a.cold,
        tol: a.tol,
        threads: a.threads,
        lf: a.lf,
        ub_onehop: a.ub_onehop,
    };
    let rows = run_sweep(
        &index,
        &index,
        &dataset,
        &queries,
        &spec,
        &heuristics,
        &opts,
        fixed_mask.as_ref(),
        gt_rows.as_deref(),
    )?;
    let provenance = index.manifest().short_id();
    match &a.out {
        Some(path) => {
            let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
            emit_csv(&rows, &provenance, &mut f)?;
            println!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            emit_csv(&rows, &provenance, &mut stdout)?;
        }
    }
    Ok(())
}
