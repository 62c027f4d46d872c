//! Exact filtered kNN by exhaustive scan, and recall against it.
//!
//! This is the ground truth every quality claim is checked against; it
//! shares nothing with the graph search path beyond the distance kernels.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;

use crate::dataset::NodeId;
use crate::dist::DistanceKind;
use crate::error::Error;
use crate::search::{MaskView, Scored};
use crate::source::{RowView, VectorSource};
use crate::Result;

/// Exact top-k for one query: ascending `(distance, id)`, all selected.
pub type GroundTruth = Vec<Scored>;

/// Scans every selected vector and returns the exact
/// `min(k, |S|)` nearest, ties at the k-th distance broken by lower id.
pub fn brute_force_knn<S: VectorSource>(
    source: &S,
    kind: DistanceKind,
    query: &[f32],
    mask: MaskView<'_>,
    k: usize,
) -> Result<GroundTruth> {
    if k == 0 {
        return Err(Error::usage("k must be at least 1"));
    }
    if query.len() != source.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            actual: query.len(),
        });
    }
    let mut worst_k: BinaryHeap<Scored> = BinaryHeap::new();
    for i in 0..source.len() {
        let v = NodeId(i as u32);
        if !mask.contains(v) {
            continue;
        }
        let d = source.with_row(v, |row| match row {
            RowView::Floats(b) => crate::dist::distance(kind, query, b, &mut crate::dist::NoSink),
            RowView::Bytes(segs) => {
                crate::dist::distance_bytes(kind, query, segs, &mut crate::dist::NoSink)
            }
        })??;
        let s = Scored::new(d, v);
        if worst_k.len() < k {
            worst_k.push(s);
        } else if s < *worst_k.peek().expect("nonempty") {
            worst_k.push(s);
            worst_k.pop();
        }
    }
    let mut out = worst_k.into_vec();
    out.sort_unstable();
    Ok(out)
}

/// Fraction of the ground truth present in `result` (order ignored).
/// An empty truth (empty selection) counts as perfectly recalled.
pub fn recall(result: &[NodeId], truth: &[Scored]) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let hit = truth
        .iter()
        .filter(|t| result.contains(&t.node))
        .count();
    hit as f64 / truth.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::prefilter::Semimask;

    fn line(xs: &[f32]) -> Dataset {
        Dataset::from_rows(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_selected_node_always_returned() {
        let d = line(&[0.0, 100.0, 200.0]);
        let mask = Semimask::from_fn(3, |i| i == 2);
        let t = brute_force_knn(&d, DistanceKind::L2Squared, &[0.0], MaskView::Bits(&mask), 5)
            .unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].node, NodeId(2));
    }

    #[test]
    fn exact_query_ranks_first_with_zero_distance() {
        let d = line(&[0.0, 1.0, 2.0]);
        let t =
            brute_force_knn(&d, DistanceKind::L2Squared, &[1.0], MaskView::All, 2).unwrap();
        assert_eq!(t[0].node, NodeId(1));
        assert_eq!(t[0].dist.0, 0.0);
    }

    #[test]
    fn ties_break_toward_lower_id() {
        let d = line(&[1.0, -1.0, 1.0]);
        let t =
            brute_force_knn(&d, DistanceKind::L2Squared, &[0.0], MaskView::All, 2).unwrap();
        let ids: Vec<u32> = t.iter().map(|s| s.node.0).collect();
        assert_eq!(ids, vec![0, 1]);
    }

    #[test]
    fn recall_cases() {
        let truth = vec![Scored::new(0.0, NodeId(1)), Scored::new(1.0, NodeId(2))];
        assert_eq!(recall(&[NodeId(2), NodeId(1)], &truth), 1.0);
        assert_eq!(recall(&[NodeId(9)], &truth), 0.0);
        assert_eq!(recall(&[NodeId(2)], &truth), 0.5);
    }
}
