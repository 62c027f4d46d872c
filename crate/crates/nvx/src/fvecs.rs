//! fvecs reader/writer plus the optional labels sidecar.
//!
//! fvecs is the usual benchmark format: each record is a little-endian u32
//! dimension followed by that many little-endian f32 components, all
//! records sharing one dimension. Labels, when present, live next to the
//! vector file as `<stem>.labels`, a raw array of little-endian u32, one
//! per vector; node ids are always the row offsets.

use std::fs;
use std::path::{Path, PathBuf};

use nvx_core::{Dataset, NodeAttrs};

use crate::error::{Error, Result};

pub fn labels_sidecar(path: &Path) -> PathBuf {
    path.with_extension("labels")
}

/// Metadata sidecar written by the synthetic generator (`<stem>.meta.json`).
pub fn meta_sidecar(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

fn parse_fvecs(bytes: &[u8], path: &Path) -> Result<(usize, Vec<f32>)> {
    let mut dim = 0usize;
    let mut data = Vec::new();
    let mut pos = 0usize;
    while pos < bytes.len() {
        if pos + 4 > bytes.len() {
            return Err(Error::format(format!(
                "{}: truncated record header at byte {pos}",
                path.display()
            )));
        }
        let d = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        pos += 4;
        if dim == 0 {
            if d == 0 {
                return Err(Error::format(format!(
                    "{}: zero-dimensional record",
                    path.display()
                )));
            }
            dim = d;
        } else if d != dim {
            return Err(Error::format(format!(
                "{}: inconsistent dimension {d} (expected {dim})",
                path.display()
            )));
        }
        if pos + 4 * d > bytes.len() {
            return Err(Error::format(format!(
                "{}: truncated record at byte {pos}",
                path.display()
            )));
        }
        for i in 0..d {
            let raw = bytes[pos + 4 * i..pos + 4 * i + 4].try_into().unwrap();
            data.push(f32::from_le_bytes(raw));
        }
        pos += 4 * d;
    }
    if dim == 0 {
        return Err(Error::format(format!("{}: empty file", path.display())));
    }
    Ok((dim, data))
}

/// Loads vectors plus the labels sidecar (if present) into a dataset.
pub fn load_fvecs(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (dim, data) = parse_fvecs(&bytes, path)?;
    let n = data.len() / dim;
    let labels = read_labels(&labels_sidecar(path), n)?;
    let attrs = (0..n)
        .map(|i| NodeAttrs {
            id: i as u64,
            label: labels.as_ref().map_or(0, |l| l[i]),
        })
        .collect();
    Ok(Dataset::new(dim, data, attrs)?)
}

/// Loads raw query vectors (no attributes) from an fvecs file.
pub fn load_query_fvecs(path: impl AsRef<Path>) -> Result<Vec<Vec<f32>>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (dim, data) = parse_fvecs(&bytes, path)?;
    Ok(data.chunks(dim).map(<[f32]>::to_vec).collect())
}

fn read_labels(path: &Path, n: usize) -> Result<Option<Vec<u32>>> {
    if !path.exists() {
        return Ok(None);
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != 4 * n {
        return Err(Error::format(format!(
            "{}: {} bytes but expected {} for {n} labels",
            path.display(),
            bytes.len(),
            4 * n
        )));
    }
    Ok(Some(
        bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    ))
}

/// Writes a dataset as fvecs; labels go to the sidecar when any is nonzero.
pub fn write_fvecs(path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let rows: Vec<Vec<f32>> = (0..dataset.len())
        .map(|i| dataset.row(nvx_core::NodeId(i as u32)).to_vec())
        .collect();
    write_query_fvecs(path, &rows)?;
    if dataset.all_attrs().iter().any(|a| a.label != 0) {
        let mut bytes = Vec::with_capacity(4 * dataset.len());
        for a in dataset.all_attrs() {
            bytes.extend_from_slice(&a.label.to_le_bytes());
        }
        let sidecar = labels_sidecar(path);
        fs::write(&sidecar, bytes).map_err(|e| Error::io(&sidecar, e))?;
    }
    Ok(())
}

/// Writes bare vectors as fvecs.
pub fn write_query_fvecs(path: impl AsRef<Path>, rows: &[Vec<f32>]) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for r in rows {
        out.extend_from_slice(&(r.len() as u32).to_le_bytes());
        for x in r {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
