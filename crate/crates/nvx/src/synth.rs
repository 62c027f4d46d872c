//! Synthetic datasets, query workloads, correlated masks, and the
//! correlation ratio that validates them.
//!
//! The corpus is a Gaussian mixture: cluster centers uniform in `[0,1]^dim`
//! with per-cluster spread; a node's label is the cluster it was drawn
//! from. Correlated selections are built by distance rank around the query
//! (nearest fraction for positive, farthest for negative), and the
//! correlation ratio `ce` — the selected share of the query's true nearest
//! neighbors relative to global selectivity — confirms the regime:
//! `ce ≈ 1` uncorrelated, `ce ≫ 1` positive, `ce ≪ 1` negative.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use nvx_core::{
    brute_force_knn, Bitset, Dataset, DistanceKind, MaskView, NodeAttrs, NodeId, Semimask,
};

use crate::error::{Error, Result};

/// Parameters of the synthetic Gaussian-mixture corpus. Serialized next to
/// generated datasets so workloads can draw fresh mixture samples later.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    pub dim: usize,
    pub clusters: usize,
    pub spread: f32,
    pub seed: u64,
}

/// How the selected subset relates to the query's neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correlation {
    Uncorrelated,
    Positive,
    Negative,
}

impl Correlation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Correlation::Uncorrelated => "un",
            Correlation::Positive => "pos",
            Correlation::Negative => "neg",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "un" | "uncorrelated" => Ok(Correlation::Uncorrelated),
            "pos" | "positive" => Ok(Correlation::Positive),
            "neg" | "negative" => Ok(Correlation::Negative),
            other => Err(Error::usage(format!("unknown correlation mode '{other}'"))),
        }
    }
}

/// A full sweep description: the selectivity axis, the correlation mode,
/// and the recall target the bench tunes toward.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WorkloadSpec {
    pub selectivities: Vec<f64>,
    pub correlation: Correlation,
    pub query_count: usize,
    pub k: usize,
    pub target_recall: f64,
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        if self.query_count == 0 {
            return Err(Error::usage("query_count must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::usage("k must be at least 1"));
        }
        if self
            .selectivities
            .iter()
            .any(|s| !(*s > 0.0 && *s <= 1.0))
        {
            return Err(Error::usage("selectivities must lie in (0, 1]"));
        }
        if !(self.target_recall > 0.0 && self.target_recall <= 1.0) {
            return Err(Error::usage("target_recall must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Per-query correlation measurements at one selectivity.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    pub sigma: f64,
    pub ce: Vec<f64>,
    pub mean_ce: f64,
}

fn centers(spec: &SynthSpec) -> Vec<Vec<f32>> {
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    (0..spec.clusters)
        .map(|_| (0..spec.dim).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect()
}

/// Deterministic Gaussian-mixture dataset; node `i` is drawn around center
/// `i % clusters` and labeled with that cluster.
pub fn gen_synthetic(spec: &SynthSpec) -> Result<Dataset> {
    if spec.clusters == 0 {
        return Err(Error::usage("clusters must be at least 1"));
    }
    if spec.n == 0 || spec.dim == 0 {
        return Err(Error::usage("n and dim must be positive"));
    }
    let centers = centers(spec);
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed.wrapping_add(1));
    let normal = Normal::new(0.0f32, spec.spread.max(0.0)).map_err(|e| Error::usage(e.to_string()))?;
    let mut data = Vec::with_capacity(spec.n * spec.dim);
    let mut attrs = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let c = i % spec.clusters;
        for d in 0..spec.dim {
            let noise = if spec.spread > 0.0 {
                normal.sample(&mut rng)
            } else {
                0.0
            };
            data.push(centers[c][d] + noise);
        }
        attrs.push(NodeAttrs {
            id: i as u64,
            label: c as u32,
        });
    }
    Ok(Dataset::new(spec.dim, data, attrs)?)
}

/// Fraction of cluster spread used to perturb positive-correlation queries.
const QUERY_NOISE_FRACTION: f32 = 0.1;

/// Query vectors for a workload. Uncorrelated and negative modes draw
/// fresh mixture samples; positive mode perturbs random dataset vectors.
pub fn gen_queries(
    dataset: &Dataset,
    spec: &SynthSpec,
    mode: Correlation,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f32>>> {
    if count == 0 {
        return Err(Error::usage("query count must be at least 1"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x51ab_77fe_0135_aa02);
    let mut out = Vec::with_capacity(count);
    match mode {
        Correlation::Uncorrelated | Correlation::Negative => {
            let centers = centers(spec);
            let normal =
                Normal::new(0.0f32, spec.spread.max(f32::MIN_POSITIVE)).map_err(|e| Error::usage(e.to_string()))?;
            for _ in 0..count {
                let c = rng.gen_range(0..spec.clusters);
                out.push(
                    (0..spec.dim)
                        .map(|d| centers[c][d] + normal.sample(&mut rng))
                        .collect(),
                );
            }
        }
        Correlation::Positive => {
            let noise = Normal::new(0.0f32, (spec.spread * QUERY_NOISE_FRACTION).max(f32::MIN_POSITIVE))
                .map_err(|e| Error::usage(e.to_string()))?;
            for _ in 0..count {
                let v = NodeId(rng.gen_range(0..dataset.len() as u32));
                out.push(
                    dataset
                        .row(v)
                        .iter()
                        .map(|x| x + noise.sample(&mut rng))
                        .collect(),
                );
            }
        }
    }
    Ok(out)
}

/// Selects exactly `floor(sigma * n)` nodes: the nearest to the query
/// (positive), the farthest (negative), or a uniform exact-count sample
/// (uncorrelated). Deterministic per seed.
pub fn gen_correlated_mask(
    dataset: &Dataset,
    kind: DistanceKind,
    query: &[f32],
    sigma: f64,
    mode: Correlation,
    seed: u64,
) -> Result<Semimask> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::usage("sigma must lie in (0, 1]"));
    }
    let n = dataset.len();
    let count = ((sigma * n as f64).floor() as usize).min(n);
    if mode == Correlation::Uncorrelated {
        let mut bits = Bitset::new(n);
        for id in nvx_core::sampling::sample_exact(n, count, seed) {
            bits.set(id as usize);
        }
        return Ok(Semimask::from_bitset(bits));
    }
    // Rank every node by true distance; ties break by id via the sort key.
    let mut ranked = brute_force_knn(dataset, kind, query, MaskView::All, n.max(1))?;
    let mut bits = Bitset::new(n);
    let chosen = match mode {
        Correlation::Positive => &ranked[..count],
        Correlation::Negative => {
            let start = ranked.len() - count;
            &ranked[start..]
        }
        Correlation::Uncorrelated => unreachable!(),
    };
    for s in chosen {
        bits.set(s.node.index());
    }
    ranked.clear();
    Ok(Semimask::from_bitset(bits))
}

/// Correlation ratio `ce`: the mask-selected share of the query's true
/// k-nearest neighbors in the whole collection, over global selectivity.
pub fn correlation_ce(
    dataset: &Dataset,
    kind: DistanceKind,
    mask: &Semimask,
    query: &[f32],
    k: usize,
) -> Result<f64> {
    if mask.selected_count() == 0 {
        return Err(Error::usage("correlation ratio needs a nonempty selection"));
    }
    if k == 0 || k > dataset.len() {
        return Err(Error::usage("k must lie in 1..=n"));
    }
    let truth = brute_force_knn(dataset, kind, query, MaskView::All, k)?;
    let selected = truth.iter().filter(|s| mask.contains(s.node)).count();
    let sigma_q = selected as f64 / k as f64;
    Ok(sigma_q / mask.global_selectivity())
}
