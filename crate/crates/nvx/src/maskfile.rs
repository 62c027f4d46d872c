//! Semimask file format: externally computed selections plug in here.
//!
//! Layout: magic `NVXMASK1` (8 bytes) | u64 little-endian bit length |
//! `ceil(n/8)` bytes, LSB-first (bit `i` lives in byte `i/8`, bit `i%8`).

use std::fs;
use std::path::Path;

use nvx_core::{Bitset, Semimask};

use crate::error::{Error, Result};

pub const MASK_MAGIC: &[u8; 8] = b"NVXMASK1";

pub fn write_mask(path: impl AsRef<Path>, mask: &Semimask) -> Result<()> {
    let path = path.as_ref();
    let n = mask.len();
    let mut out = Vec::with_capacity(16 + n.div_ceil(8));
    out.extend_from_slice(MASK_MAGIC);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    let mut bytes: Vec<u8> = mask
        .bits()
        .words()
        .iter()
        .flat_map(|w| w.to_le_bytes())
        .collect();
    bytes.truncate(n.div_ceil(8));
    out.extend_from_slice(&bytes);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<Semimask> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || &bytes[..8] != MASK_MAGIC {
        return Err(Error::format(format!(
            "{}: not a mask file",
            path.display()
        )));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let payload = &bytes[16..];
    if payload.len() != n.div_ceil(8) {
        return Err(Error::format(format!(
            "{}: expected {} payload bytes for {n} bits, found {}",
            path.display(),
            n.div_ceil(8),
            payload.len()
        )));
    }
    let mut padded = payload.to_vec();
    padded.resize(n.div_ceil(64) * 8, 0);
    let words: Vec<u64> = padded
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Semimask::from_bitset(Bitset::from_words(words, n)))
}
