//! Distance kernels and the distance-computation counting contract.
//!
//! Components are stored as f32 and accumulated in f64 to bound drift.
//! Both kernels run the same element-by-element fold regardless of whether
//! the second operand arrives as an in-memory `&[f32]` row or as raw
//! little-endian bytes sitting in a buffer-manager frame, so the two access
//! paths produce bitwise-identical distances.

use crate::error::Error;
use crate::Result;

/// Distance function fixed per index at build time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceKind {
    /// Squared Euclidean distance (monotone in L2, so search order is
    /// unchanged and the square root is never taken).
    L2Squared,
    /// `1 - cos(a, b)`, in `[0, 2]` for nonzero vectors.
    Cosine,
}

impl DistanceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DistanceKind::L2Squared => "l2",
            DistanceKind::Cosine => "cosine",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "l2" | "l2sq" | "l2squared" => Ok(DistanceKind::L2Squared),
            "cosine" | "cos" => Ok(DistanceKind::Cosine),
            other => Err(Error::usage(alloc::format!(
                "unknown distance kind '{other}' (expected l2 or cosine)"
            ))),
        }
    }
}

/// Finite f64 distance with a total order, usable as a priority-queue key.
///
/// Non-finite inputs are rejected at ingest, so `total_cmp` coincides with
/// the usual numeric order here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dist(pub f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Receives one notification per distance computation; this is the unit in
/// which total distance computations (`t_dc`) are measured.
pub trait DistanceSink {
    fn on_distance(&mut self);
}

impl DistanceSink for u64 {
    fn on_distance(&mut self) {
        *self += 1;
    }
}

/// Sink for callers that do not count.
pub struct NoSink;

impl DistanceSink for NoSink {
    fn on_distance(&mut self) {}
}

#[inline]
fn l2_fold(a: &[f32], b: impl Iterator<Item = f32>) -> f64 {
    let mut acc = 0.0f64;
    for (i, y) in b.enumerate() {
        let d = a[i] as f64 - y as f64;
        acc += d * d;
    }
    acc
}

#[inline]
fn cosine_fold(a: &[f32], b: impl Iterator<Item = f32>) -> (f64, f64, f64) {
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (i, y) in b.enumerate() {
        let x = a[i] as f64;
        let y = y as f64;
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    (dot, na, nb)
}

#[inline]
fn cosine_from_parts(dot: f64, na: f64, nb: f64) -> Result<f64> {
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(1.0 - dot / (libm::sqrt(na) * libm::sqrt(nb)))
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a,
            actual: b,
        });
    }
    Ok(())
}

/// Squared Euclidean distance `Σ (a_i - b_i)^2`.
pub fn l2_squared(a: &[f32], b: &[f32]) -> Result<f64> {
    check_dims(a.len(), b.len())?;
    Ok(l2_fold(a, b.iter().copied()))
}

/// Cosine distance `1 - a·b / (‖a‖‖b‖)`.
pub fn cosine_distance(a: &[f32], b: &[f32]) -> Result<f64> {
    check_dims(a.len(), b.len())?;
    let (dot, na, nb) = cosine_fold(a, b.iter().copied());
    cosine_from_parts(dot, na, nb)
}

/// Dispatches to the kernel for `kind`, notifying `sink` exactly once.
pub fn distance(
    kind: DistanceKind,
    a: &[f32],
    b: &[f32],
    sink: &mut impl DistanceSink,
) -> Result<f64> {
    sink.on_distance();
    match kind {
        DistanceKind::L2Squared => l2_squared(a, b),
        DistanceKind::Cosine => cosine_distance(a, b),
    }
}

/// Infallible variant for internal hot paths where preconditions (equal
/// dims, nonzero norms under Cosine) are established at ingest/build time.
#[inline]
pub(crate) fn distance_unchecked(kind: DistanceKind, a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    match kind {
        DistanceKind::L2Squared => l2_fold(a, b.iter().copied()),
        DistanceKind::Cosine => {
            let (dot, na, nb) = cosine_fold(a, b.iter().copied());
            debug_assert!(na > 0.0 && nb > 0.0);
            1.0 - dot / (libm::sqrt(na) * libm::sqrt(nb))
        }
    }
}

/// Distance of `query` to a row delivered as little-endian byte segments.
///
/// The fold order matches the slice kernels element for element, so the
/// result is bitwise identical to copying the row out first.
pub fn distance_bytes(
    kind: DistanceKind,
    query: &[f32],
    segments: &[&[u8]],
    sink: &mut impl DistanceSink,
) -> Result<f64> {
    let total: usize = segments.iter().map(|s| s.len()).sum();
    if total != query.len() * 4 {
        return Err(Error::DimensionMismatch {
            expected: query.len(),
            actual: total / 4,
        });
    }
    sink.on_distance();
    let iter = LeF32s::new(segments);
    match kind {
        DistanceKind::L2Squared => Ok(l2_fold(query, iter)),
        DistanceKind::Cosine => {
            let (dot, na, nb) = cosine_fold(query, iter);
            cosine_from_parts(dot, na, nb)
        }
    }
}

/// Iterator decoding little-endian f32s from a run of byte segments.
/// Individual floats may straddle a segment boundary.
pub struct LeF32s<'a> {
    segments: &'a [&'a [u8]],
    seg: usize,
    off: usize,
}

impl<'a> LeF32s<'a> {
    pub fn new(segments: &'a [&'a [u8]]) -> Self {
        LeF32s {
            segments,
            seg: 0,
            off: 0,
        }
    }

    #[inline]
    fn next_byte(&mut self) -> Option<u8> {
        while self.seg < self.segments.len() {
            let s = self.segments[self.seg];
            if self.off < s.len() {
                let b = s[self.off];
                self.off += 1;
                return Some(b);
            }
            self.seg += 1;
            self.off = 0;
        }
        None
    }
}

impl Iterator for LeF32s<'_> {
    type Item = f32;

    #[inline]
    fn next(&mut self) -> Option<f32> {
        // Fast path: the whole float lives in the current segment.
        if let Some(s) = self.segments.get(self.seg) {
            if self.off + 4 <= s.len() {
                let raw = [s[self.off], s[self.off + 1], s[self.off + 2], s[self.off + 3]];
                self.off += 4;
                return Some(f32::from_le_bytes(raw));
            }
        }
        let mut raw = [0u8; 4];
        for slot in &mut raw {
            *slot = self.next_byte()?;
        }
        Some(f32::from_le_bytes(raw))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    #[test]
    fn l2_known_values() {
        // 3-4-5 triangle, squared.
        assert_eq!(l2_squared(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 25.0);
        let v = [0.3, -1.2, 7.5];
        assert_eq!(l2_squared(&v, &v).unwrap(), 0.0);
        // Hand sum: 9 + 16 + 0.
        assert_eq!(l2_squared(&[1.0, 2.0, 3.0], &[4.0, 6.0, 3.0]).unwrap(), 25.0);
    }

    #[test]
    fn cosine_known_values() {
        let v = [0.5, 0.25, -2.0];
        assert!(cosine_distance(&v, &v).unwrap() <= 1e-6);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 2.0);
    }

    #[test]
    fn cosine_zero_norm_is_domain_error() {
        assert_eq!(
            cosine_distance(&[0.0, 0.0], &[1.0, 0.0]).unwrap_err(),
            Error::ZeroNorm
        );
    }

    #[test]
    fn dimension_mismatch_is_usage_error() {
        assert!(matches!(
            l2_squared(&[1.0], &[1.0, 2.0]).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn sink_counts_each_call_once() {
        let mut calls = 0u64;
        for _ in 0..3 {
            distance(DistanceKind::L2Squared, &[0.0, 0.0], &[3.0, 4.0], &mut calls).unwrap();
        }
        assert_eq!(calls, 3);
    }

    #[test]
    fn byte_path_matches_slice_path_across_split() {
        let a: Vec<f32> = (0..17).map(|i| i as f32 * 0.37 - 2.0).collect();
        let b: Vec<f32> = (0..17).map(|i| (i as f32).sin()).collect();
        let bytes: Vec<u8> = b.iter().flat_map(|x| x.to_le_bytes()).collect();
        let expect = l2_squared(&a, &b).unwrap();
        // Try every split point, including ones that cut a float in half.
        for cut in 0..bytes.len() {
            let segs = [&bytes[..cut], &bytes[cut..]];
            let got = distance_bytes(DistanceKind::L2Squared, &a, &segs, &mut NoSink).unwrap();
            assert_eq!(got.to_bits(), expect.to_bits());
        }
        let expect_cos = cosine_distance(&a, &b).unwrap();
        let segs = [&bytes[..5], &bytes[5..]];
        let got = distance_bytes(DistanceKind::Cosine, &a, &segs, &mut NoSink).unwrap();
        assert_eq!(got.to_bits(), expect_cos.to_bits());
    }

    #[test]
    fn dist_orders_totally() {
        let mut v = vec![Dist(2.0), Dist(0.5), Dist(1.0)];
        v.sort();
        assert_eq!(v, vec![Dist(0.5), Dist(1.0), Dist(2.0)]);
    }
}
