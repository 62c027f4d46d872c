//! Ground-truth file: the exact top-k ids per query, for reuse across runs.
//!
//! Layout: magic `NVXGT1\0\0` | u32 k | u32 q | `q * k` little-endian u64
//! node ids, query-major.

use std::fs;
use std::path::Path;

use nvx_core::NodeId;

use crate::error::{Error, Result};

pub const GT_MAGIC: &[u8; 8] = b"NVXGT1\0\0";

pub fn write_gt(path: impl AsRef<Path>, per_query: &[Vec<NodeId>]) -> Result<()> {
    let path = path.as_ref();
    let q = per_query.len();
    if q == 0 {
        return Err(Error::usage("ground truth needs at least one query"));
    }
    let k = per_query[0].len();
    if k == 0 {
        return Err(Error::usage("ground truth rows are empty"));
    }
    if per_query.iter().any(|r| r.len() != k) {
        return Err(Error::usage(
            "ground truth rows must share one length (same k and mask)",
        ));
    }
    let mut out = Vec::with_capacity(16 + 8 * q * k);
    out.extend_from_slice(GT_MAGIC);
    out.extend_from_slice(&(k as u32).to_le_bytes());
    out.extend_from_slice(&(q as u32).to_le_bytes());
    for row in per_query {
        for id in row {
            out.extend_from_slice(&(id.0 as u64).to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_gt(path: impl AsRef<Path>) -> Result<(usize, Vec<Vec<NodeId>>)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || &bytes[..8] != GT_MAGIC {
        return Err(Error::format(format!(
            "{}: not a ground-truth file",
            path.display()
        )));
    }
    let k = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let q = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if bytes.len() != 16 + 8 * q * k {
        return Err(Error::format(format!(
            "{}: expected {} id bytes, found {}",
            path.display(),
            8 * q * k,
            bytes.len() - 16
        )));
    }
    let mut rows = Vec::with_capacity(q);
    let mut pos = 16;
    for _ in 0..q {
        let mut row = Vec::with_capacity(k);
        for _ in 0..k {
            let id = u64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap());
            if id > u32::MAX as u64 {
                return Err(Error::format(format!(
                    "{}: id {id} exceeds node id space",
                    path.display()
                )));
            }
            row.push(NodeId(id as u32));
            pos += 8;
        }
        rows.push(row);
    }
    Ok((k, rows))
}
