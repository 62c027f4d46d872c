//! Abstraction over where vector payloads live.
//!
//! During construction vectors sit in an in-memory [`Dataset`]; after an
//! index is persisted they are read through a paged store that hands the
//! distance kernel the raw bytes of the buffer frame(s) holding the row, so
//! no row copy is ever made. Both paths implement [`VectorSource`].

use crate::dataset::{Dataset, NodeId};
use crate::dist::{self, DistanceKind, DistanceSink};
use crate::error::Error;
use crate::Result;

/// Borrowed view of one stored row.
pub enum RowView<'a> {
    /// Row available as an f32 slice (in-memory dataset).
    Floats(&'a [f32]),
    /// Row available as little-endian byte segments (paged frames); a row
    /// that spans frames arrives as multiple segments.
    Bytes(&'a [&'a [u8]]),
}

/// Random access to vector rows, however they are stored.
pub trait VectorSource {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dim(&self) -> usize;

    /// Runs `f` against the row of `v` without copying it.
    fn with_row<R>(&self, v: NodeId, f: impl FnOnce(RowView<'_>) -> R) -> Result<R>;
}

impl VectorSource for Dataset {
    fn len(&self) -> usize {
        Dataset::len(self)
    }

    fn dim(&self) -> usize {
        Dataset::dim(self)
    }

    fn with_row<R>(&self, v: NodeId, f: impl FnOnce(RowView<'_>) -> R) -> Result<R> {
        if v.index() >= self.len() {
            return Err(Error::usage(alloc::format!(
                "node {v} out of range (n = {})",
                self.len()
            )));
        }
        Ok(f(RowView::Floats(self.row(v))))
    }
}

/// Distance from `query` to the stored row `v`, notifying `sink` once.
pub fn distance_to
<S: VectorSource>(
    source: &S,
    kind: DistanceKind,
    query: &[f32],
    v: NodeId,
    sink: &mut impl DistanceSink,
) -> Result<f64> {
    source.with_row(v, |row| match row {
        RowView::Floats(b) => dist::distance(kind, query, b, sink),
        RowView::Bytes(segs) => dist::distance_bytes(kind, query, segs, sink),
    })?
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn dataset_distance_counts() {
        let d = Dataset::from_rows(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        let mut c = 0u64;
        let got = distance_to(&d, DistanceKind::L2Squared, &[0.0, 0.0], NodeId(1), &mut c).unwrap();
        assert_eq!(got, 25.0);
        assert_eq!(c, 1);
    }

    #[test]
    fn out_of_range_is_usage_error() {
        let d = Dataset::from_rows(&[vec![0.0]]).unwrap();
        assert!(matches!(
            distance_to(&d, DistanceKind::L2Squared, &[0.0], NodeId(5), &mut 0u64),
            Err(Error::Usage(_))
        ));
    }
}
