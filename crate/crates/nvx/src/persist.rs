//! On-disk index layout and the disk-backed searchable index.
//!
//! An index directory holds four files:
//!
//! * `vectors.nvx` — magic `NVXVEC1\0` | u64 n | u32 dim | u8 distance
//!   kind (0 = l2, 1 = cosine) | raw little-endian f32 rows. Row `v`
//!   starts at `21 + v * dim * 4`.
//! * `lower.csr` — magic `NVXCSR1\0` | u32 version (= 1) | u64 n |
//!   u32 m_lower | u64 offsets\[n + 1\] | u32 edges\[nnz\]. Reading one
//!   adjacency list costs two paged reads: the offset pair, then the edge
//!   run — separate page touches when they land on different pages.
//! * `upper.gph` — magic `NVXUPR1\0` | u64 m | u64 member_ids\[m\]
//!   (ascending; the first is the entry point) | u64 offsets\[m + 1\] |
//!   u32 edges. Loaded fully resident at open; the upper layer stays in
//!   memory at all times.
//! * `manifest.json` — the build parameters and a SHA-256 per file,
//!   verified on load.
//!
//! Searches against a loaded index read adjacency and vectors through the
//! paged store; vector distances run directly against the frame bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use nvx_core::{
    Dataset, DistanceKind, IndexParams, Layer, NodeId, RowView, SearchIndex, TwoLevelGraph,
    VectorSource,
};

use crate::error::{Error, Result};
use crate::pager::{PagedFile, StoreCounters, PAGE_SIZE};

pub const VEC_MAGIC: &[u8; 8] = b"NVXVEC1\0";
pub const CSR_MAGIC: &[u8; 8] = b"NVXCSR1\0";
pub const UPPER_MAGIC: &[u8; 8] = b"NVXUPR1\0";
pub const CSR_VERSION: u32 = 1;

pub const VEC_HEADER: u64 = 21;
pub const CSR_HEADER: u64 = 24;

pub const VECTORS_FILE: &str = "vectors.nvx";
pub const LOWER_FILE: &str = "lower.csr";
pub const UPPER_FILE: &str = "upper.gph";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Frames below which a paged store cannot serve spanning rows.
const MIN_FRAMES: usize = 4;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FileStamp {
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IndexManifest {
    pub format_version: u32,
    pub n: u64,
    pub dim: u32,
    pub m_upper: u32,
    pub m_lower: u32,
    pub ef_construction: u32,
    pub sample_rate: f64,
    pub distance: String,
    pub seed: u64,
    pub entry: u64,
    pub files: std::collections::BTreeMap<String, FileStamp>,
}

impl IndexManifest {
    pub fn distance_kind(&self) -> Result<DistanceKind> {
        Ok(DistanceKind::parse(&self.distance)?)
    }

    /// Checksum identifying this index in bench output.
    pub fn short_id(&self) -> String {
        self.files
            .get(LOWER_FILE)
            .map(|f| f.sha256[..12].to_string())
            .unwrap_or_default()
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<FileStamp> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(FileStamp {
        bytes: bytes.len() as u64,
        sha256: sha256_hex(bytes),
    })
}

fn kind_byte(kind: DistanceKind) -> u8 {
    match kind {
        DistanceKind::L2Squared => 0,
        DistanceKind::Cosine => 1,
    }
}

fn kind_from_byte(b: u8) -> Result<DistanceKind> {
    match b {
        0 => Ok(DistanceKind::L2Squared),
        1 => Ok(DistanceKind::Cosine),
        other => Err(Error::format(format!("unknown distance kind byte {other}"))),
    }
}

/// Writes the dataset vectors and both graph layers under `dir`.
pub fn persist(graph: &TwoLevelGraph, dataset: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    if dataset.is_empty() {
        return Err(Error::usage("refusing to persist an empty index"));
    }
    if graph.node_count() != dataset.len() {
        return Err(Error::usage(format!(
            "graph covers {} nodes but dataset has {}",
            graph.node_count(),
            dataset.len()
        )));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let params = graph.params();
    let n = dataset.len();

    // vectors.nvx
    let mut vec_bytes = Vec::with_capacity(VEC_HEADER as usize + n * dataset.dim() * 4);
    vec_bytes.extend_from_slice(VEC_MAGIC);
    vec_bytes.extend_from_slice(&(n as u64).to_le_bytes());
    vec_bytes.extend_from_slice(&(dataset.dim() as u32).to_le_bytes());
    vec_bytes.push(kind_byte(params.kind));
    for x in dataset.raw_data() {
        vec_bytes.extend_from_slice(&x.to_le_bytes());
    }
    let vec_stamp = write_file(dir, VECTORS_FILE, &vec_bytes)?;
    drop(vec_bytes);

    // lower.csr
    let lower = graph.snapshot(Layer::Lower);
    let nnz: usize = lower.iter().map(Vec::len).sum();
    let mut csr = Vec::with_capacity(CSR_HEADER as usize + (n + 1) * 8 + nnz * 4);
    csr.extend_from_slice(CSR_MAGIC);
    csr.extend_from_slice(&CSR_VERSION.to_le_bytes());
    csr.extend_from_slice(&(n as u64).to_le_bytes());
    csr.extend_from_slice(&(params.m_lower as u32).to_le_bytes());
    let mut off = 0u64;
    for row in &lower {
        csr.extend_from_slice(&off.to_le_bytes());
        off += row.len() as u64;
    }
    csr.extend_from_slice(&off.to_le_bytes());
    for row in &lower {
        for id in row {
            csr.extend_from_slice(&id.0.to_le_bytes());
        }
    }
    let csr_stamp = write_file(dir, LOWER_FILE, &csr)?;
    drop(csr);

    // upper.gph
    let members = graph.upper_members();
    let upper = graph.snapshot(Layer::Upper);
    let unnz: usize = upper.iter().map(Vec::len).sum();
    let mut gph = Vec::with_capacity(8 + 8 + members.len() * 8 + (members.len() + 1) * 8 + unnz * 4);
    gph.extend_from_slice(UPPER_MAGIC);
    gph.extend_from_slice(&(members.len() as u64).to_le_bytes());
    for m in members {
        gph.extend_from_slice(&(m.0 as u64).to_le_bytes());
    }
    let mut off = 0u64;
    for row in &upper {
        gph.extend_from_slice(&off.to_le_bytes());
        off += row.len() as u64;
    }
    gph.extend_from_slice(&off.to_le_bytes());
    for row in &upper {
        for id in row {
            gph.extend_from_slice(&id.0.to_le_bytes());
        }
    }
    let upper_stamp = write_file(dir, UPPER_FILE, &gph)?;
    drop(gph);

    let mut files = std::collections::BTreeMap::new();
    files.insert(VECTORS_FILE.to_string(), vec_stamp);
    files.insert(LOWER_FILE.to_string(), csr_stamp);
    files.insert(UPPER_FILE.to_string(), upper_stamp);
    let manifest = IndexManifest {
        format_version: 1,
        n: n as u64,
        dim: dataset.dim() as u32,
        m_upper: params.m_upper as u32,
        m_lower: params.m_lower as u32,
        ef_construction: params.ef_construction as u32,
        sample_rate: params.sample_rate,
        distance: params.kind.as_str().to_string(),
        seed: params.seed,
        entry: graph.entry().0 as u64,
        files,
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::format(format!("manifest serialization: {e}")))?;
    fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(())
}

struct UpperResident {
    members: Vec<NodeId>,
    /// Original id -> dense position, u32::MAX when absent.
    pos: Vec<u32>,
    offsets: Vec<u64>,
    edges: Vec<NodeId>,
}

enum VectorBacking {
    Paged(PagedFile),
    Resident(Vec<f32>),
}

/// A persisted index opened for search. Adjacency (lower layer) and
/// vectors are read through bounded page pools; the upper layer is
/// resident.
pub struct PagedIndex {
    manifest: IndexManifest,
    kind: DistanceKind,
    n: usize,
    dim: usize,
    m_upper: usize,
    m_lower: usize,
    entry: NodeId,
    upper: UpperResident,
    lower: PagedFile,
    lower_offsets_base: u64,
    lower_edges_base: u64,
    vectors: VectorBacking,
}

fn verify_stamp(dir: &Path, name: &str, manifest: &IndexManifest) -> Result<Vec<u8>> {
    let path = dir.join(name);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let stamp = manifest
        .files
        .get(name)
        .ok_or_else(|| Error::format(format!("manifest lists no entry for {name}")))?;
    if stamp.bytes != bytes.len() as u64 || stamp.sha256 != sha256_hex(&bytes) {
        return Err(Error::format(format!(
            "{}: checksum mismatch against manifest",
            path.display()
        )));
    }
    Ok(bytes)
}

impl PagedIndex {
    /// Opens an index directory, verifying every file against the manifest.
    ///
    /// `page_budget` bytes of frames are split between the adjacency and
    /// vector pools in proportion to file size. With `cache_vectors`, the
    /// vectors are instead held resident and only adjacency reads are
    /// paged.
    pub fn open(dir: impl AsRef<Path>, page_budget: u64, cache_vectors: bool) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest_path = dir.join(MANIFEST_FILE);
        let manifest_bytes = fs::read(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: IndexManifest = serde_json::from_slice(&manifest_bytes)
            .map_err(|e| Error::format(format!("{}: {e}", manifest_path.display())))?;
        let kind = manifest.distance_kind()?;
        let n = manifest.n as usize;
        let dim = manifest.dim as usize;

        // Upper layer: verified, parsed, resident.
        let gph = verify_stamp(dir, UPPER_FILE, &manifest)?;
        let upper = parse_upper(&gph, n)?;
        let entry = NodeId(manifest.entry as u32);
        if upper.members.first() != Some(&entry) {
            return Err(Error::format(
                "manifest entry does not match the first upper member",
            ));
        }

        // Verify the paged files fully once at open, then reopen as pools.
        let csr_bytes = verify_stamp(dir, LOWER_FILE, &manifest)?;
        validate_csr_header(&csr_bytes, n, manifest.m_lower)?;
        let vec_bytes = verify_stamp(dir, VECTORS_FILE, &manifest)?;
        validate_vec_header(&vec_bytes, n, dim, kind)?;

        let csr_size = csr_bytes.len() as u64;
        let vec_size = vec_bytes.len() as u64;
        drop(csr_bytes);

        let (csr_budget, vec_budget) = split_budget(page_budget, csr_size, vec_size);
        let lower = PagedFile::open(dir.join(LOWER_FILE), csr_budget)?;
        let vectors = if cache_vectors {
            let data = vec_bytes[VEC_HEADER as usize..]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            VectorBacking::Resident(data)
        } else {
            VectorBacking::Paged(PagedFile::open(dir.join(VECTORS_FILE), vec_budget)?)
        };
        Ok(PagedIndex {
            kind,
            n,
            dim,
            m_upper: manifest.m_upper as usize,
            m_lower: manifest.m_lower as usize,
            entry,
            upper,
            lower,
            lower_offsets_base: CSR_HEADER,
            lower_edges_base: CSR_HEADER + (n as u64 + 1) * 8,
            vectors,
            manifest,
        })
    }

    pub fn manifest(&self) -> &IndexManifest {
        &self.manifest
    }

    /// Combined counters of the adjacency and vector pools.
    pub fn cache_counters(&self) -> StoreCounters {
        let mut c = self.lower.counters();
        if let VectorBacking::Paged(v) = &self.vectors {
            let vc = v.counters();
            c.pins += vc.pins;
            c.misses += vc.misses;
        }
        c
    }

    /// Evicts every cached page from both pools.
    pub fn flush_cache(&self) -> Result<()> {
        self.lower.flush_cache()?;
        if let VectorBacking::Paged(v) = &self.vectors {
            v.flush_cache()?;
        }
        Ok(())
    }

    /// Rebuilds the full dataset from the persisted vectors (ids are
    /// offsets, labels zero). Used by the bench harness for exact scans.
    pub fn dataset(&self) -> Result<Dataset> {
        let mut data = vec![0f32; self.n * self.dim];
        match &self.vectors {
            VectorBacking::Resident(v) => data.copy_from_slice(v),
            VectorBacking::Paged(p) => {
                let mut bytes = vec![0u8; self.n * self.dim * 4];
                p.read_into(VEC_HEADER, &mut bytes)?;
                for (i, c) in bytes.chunks_exact(4).enumerate() {
                    data[i] = f32::from_le_bytes(c.try_into().unwrap());
                }
            }
        }
        let attrs = (0..self.n)
            .map(|i| nvx_core::NodeAttrs {
                id: i as u64,
                label: 0,
            })
            .collect();
        Ok(Dataset::new(self.dim, data, attrs)?)
    }

    pub fn index_params(&self) -> IndexParams {
        IndexParams {
            m_upper: self.m_upper,
            m_lower: self.m_lower,
            ef_construction: self.manifest.ef_construction as usize,
            sample_rate: self.manifest.sample_rate,
            kind: self.kind,
            seed: self.manifest.seed,
        }
    }
}

fn split_budget(total: u64, csr_size: u64, vec_size: u64) -> (u64, u64) {
    let min = (MIN_FRAMES * PAGE_SIZE) as u64;
    let total = total.max(2 * min);
    let vec_share = if csr_size + vec_size == 0 {
        total / 2
    } else {
        (total as u128 * vec_size as u128 / (csr_size + vec_size).max(1) as u128) as u64
    };
    let vec_budget = vec_share.clamp(min, total - min);
    (total - vec_budget, vec_budget)
}

fn validate_vec_header(bytes: &[u8], n: usize, dim: usize, kind: DistanceKind) -> Result<()> {
    if bytes.len() < VEC_HEADER as usize || &bytes[..8] != VEC_MAGIC {
        return Err(Error::format("vectors.nvx: bad magic"));
    }
    let fn_ = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let fdim = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as usize;
    let fkind = kind_from_byte(bytes[20])?;
    if fn_ != n || fdim != dim || fkind != kind {
        return Err(Error::format(format!(
            "vectors.nvx: header (n={fn_}, dim={fdim}, kind={fkind:?}) disagrees with manifest"
        )));
    }
    if bytes.len() as u64 != VEC_HEADER + (n * dim * 4) as u64 {
        return Err(Error::format("vectors.nvx: size mismatch"));
    }
    Ok(())
}

fn validate_csr_header(bytes: &[u8], n: usize, m_lower: u32) -> Result<()> {
    if bytes.len() < CSR_HEADER as usize || &bytes[..8] != CSR_MAGIC {
        return Err(Error::format("lower.csr: bad magic"));
    }
    let ver = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let fn_ = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let fm = u32::from_le_bytes(bytes[20..24].try_into().unwrap());
    if ver != CSR_VERSION {
        return Err(Error::format(format!("lower.csr: unknown version {ver}")));
    }
    if fn_ != n || fm != m_lower {
        return Err(Error::format(
            "lower.csr: header disagrees with manifest",
        ));
    }
    Ok(())
}

fn parse_upper(bytes: &[u8], n: usize) -> Result<UpperResident> {
    let fail = |msg: &str| Error::format(format!("upper.gph: {msg}"));
    if bytes.len() < 16 || &bytes[..8] != UPPER_MAGIC {
        return Err(fail("bad magic"));
    }
    let m = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let need = 16 + m * 8 + (m + 1) * 8;
    if bytes.len() < need {
        return Err(fail("truncated header"));
    }
    let mut members = Vec::with_capacity(m);
    let mut pos = vec![u32::MAX; n];
    for i in 0..m {
        let raw = u64::from_le_bytes(bytes[16 + i * 8..24 + i * 8].try_into().unwrap());
        if raw as usize >= n {
            return Err(fail("member id out of range"));
        }
        let id = NodeId(raw as u32);
        if members.last().is_some_and(|&l| l >= id) {
            return Err(fail("member ids not ascending"));
        }
        pos[id.index()] = i as u32;
        members.push(id);
    }
    if members.is_empty() {
        return Err(fail("no upper members"));
    }
    let off_base = 16 + m * 8;
    let mut offsets = Vec::with_capacity(m + 1);
    for i in 0..=m {
        offsets.push(u64::from_le_bytes(
            bytes[off_base + i * 8..off_base + (i + 1) * 8].try_into().unwrap(),
        ));
    }
    if offsets.windows(2).any(|w| w[0] > w[1]) {
        return Err(fail("offsets not monotone"));
    }
    let nnz = *offsets.last().unwrap() as usize;
    let edge_base = off_base + (m + 1) * 8;
    if bytes.len() != edge_base + nnz * 4 {
        return Err(fail("edge payload size mismatch"));
    }
    let mut edges = Vec::with_capacity(nnz);
    for i in 0..nnz {
        let raw = u32::from_le_bytes(bytes[edge_base + i * 4..edge_base + (i + 1) * 4].try_into().unwrap());
        if raw as usize >= n {
            return Err(fail("edge target out of range"));
        }
        edges.push(NodeId(raw));
    }
    Ok(UpperResident {
        members,
        pos,
        offsets,
        edges,
    })
}

impl SearchIndex for PagedIndex {
    fn node_count(&self) -> usize {
        self.n
    }

    fn distance_kind(&self) -> DistanceKind {
        self.kind
    }

    fn entry(&self) -> NodeId {
        self.entry
    }

    fn max_degree(&self, layer: Layer) -> usize {
        match layer {
            Layer::Upper => self.m_upper,
            Layer::Lower => self.m_lower,
        }
    }

    fn neighbors_into(
        &self,
        layer: Layer,
        v: NodeId,
        out: &mut Vec<NodeId>,
    ) -> nvx_core::Result<()> {
        out.clear();
        match layer {
            Layer::Upper => {
                let dense = *self
                    .upper
                    .pos
                    .get(v.index())
                    .ok_or_else(|| nvx_core::Error::usage(format!("node {v} out of range")))?;
                if dense == u32::MAX {
                    return Err(nvx_core::Error::usage(format!(
                        "node {v} is not in the upper layer"
                    )));
                }
                let lo = self.upper.offsets[dense as usize] as usize;
                let hi = self.upper.offsets[dense as usize + 1] as usize;
                out.extend_from_slice(&self.upper.edges[lo..hi]);
                Ok(())
            }
            Layer::Lower => {
                if v.index() >= self.n {
                    return Err(nvx_core::Error::usage(format!("node {v} out of range")));
                }
                // Two separate paged reads per list: offsets, then edges.
                let mut off = [0u8; 16];
                self.lower
                    .read_into(self.lower_offsets_base + v.index() as u64 * 8, &mut off)
                    .map_err(to_core)?;
                let lo = u64::from_le_bytes(off[..8].try_into().unwrap());
                let hi = u64::from_le_bytes(off[8..].try_into().unwrap());
                if hi < lo || (hi - lo) as usize > self.m_lower {
                    return Err(nvx_core::Error::Format(format!(
                        "lower.csr: corrupt offsets for node {v}"
                    )));
                }
                let deg = (hi - lo) as usize;
                let mut edges = vec![0u8; deg * 4];
                self.lower
                    .read_into(self.lower_edges_base + lo * 4, &mut edges)
                    .map_err(to_core)?;
                for c in edges.chunks_exact(4) {
                    out.push(NodeId(u32::from_le_bytes(c.try_into().unwrap())));
                }
                Ok(())
            }
        }
    }
}

fn to_core(e: Error) -> nvx_core::Error {
    match e {
        Error::Core(c) => c,
        Error::Io { path, source } => nvx_core::Error::Io(format!("{}: {source}", path.display())),
        Error::Format(m) => nvx_core::Error::Format(m),
        Error::Usage(m) => nvx_core::Error::Usage(m),
    }
}

impl VectorSource for PagedIndex {
    fn len(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn with_row<R>(&self, v: NodeId, f: impl FnOnce(RowView<'_>) -> R) -> nvx_core::Result<R> {
        if v.index() >= self.n {
            return Err(nvx_core::Error::usage(format!("node {v} out of range")));
        }
        match &self.vectors {
            VectorBacking::Resident(data) => {
                let start = v.index() * self.dim;
                Ok(f(RowView::Floats(&data[start..start + self.dim])))
            }
            VectorBacking::Paged(p) => {
                let offset = VEC_HEADER + (v.index() * self.dim * 4) as u64;
                p.with_range(offset, self.dim * 4, |segs| f(RowView::Bytes(segs)))
                    .map_err(to_core)
            }
        }
    }
}
