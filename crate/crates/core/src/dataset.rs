//! In-memory vector collection with per-node scalar attributes.

use alloc::format;
use alloc::vec::Vec;

use crate::dist::DistanceKind;
use crate::error::Error;
use crate::Result;

/// Identifier of a vector: its 0-based offset in the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

impl core::fmt::Display for NodeId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Filterable attributes attached to each vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NodeAttrs {
    pub id: u64,
    pub label: u32,
}

/// `n` row-major f32 vectors of equal dimension plus their attributes.
///
/// Ingest rejects NaN and infinity so that every distance is finite and the
/// priority queues used during search keep a total order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    data: Vec<f32>,
    attrs: Vec<NodeAttrs>,
}

impl Dataset {
    pub fn new(dim: usize, data: Vec<f32>, attrs: Vec<NodeAttrs>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::usage("dimension must be positive"));
        }
        if data.len() % dim != 0 {
            return Err(Error::format(format!(
                "data length {} is not a multiple of dim {dim}",
                data.len()
            )));
        }
        let n = data.len() / dim;
        if attrs.len() != n {
            return Err(Error::format(format!(
                "attribute count {} does not match vector count {n}",
                attrs.len()
            )));
        }
        if n > u32::MAX as usize {
            return Err(Error::usage("dataset exceeds u32 node id space"));
        }
        if let Some(bad) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { node: bad / dim });
        }
        Ok(Dataset { dim, data, attrs })
    }

    /// Builds a dataset from rows, assigning `id = offset` and `label = 0`.
    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: r.len(),
                });
            }
            let _ = i;
            data.extend_from_slice(r);
        }
        let attrs = (0..rows.len())
            .map(|i| NodeAttrs {
                id: i as u64,
                label: 0,
            })
            .collect();
        Dataset::new(dim, data, attrs)
    }

    pub fn len(&self) -> usize {
        self.attrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attrs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, v: NodeId) -> &[f32] {
        let i = v.index() * self.dim;
        &self.data[i..i + self.dim]
    }

    pub fn attrs(&self, v: NodeId) -> NodeAttrs {
        self.attrs[v.index()]
    }

    pub fn all_attrs(&self) -> &[NodeAttrs] {
        &self.attrs
    }

    pub fn raw_data(&self) -> &[f32] {
        &self.data
    }

    /// Distance between two stored rows. Rows share a dimension by
    /// construction so this cannot fail on dimension grounds; a zero-norm
    /// row under Cosine is rejected when the index is built.
    #[inline]
    pub fn distance_between(&self, kind: DistanceKind, a: NodeId, b: NodeId) -> f64 {
        crate::dist::distance_unchecked(kind, self.row(a), self.row(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_non_finite() {
        let err = Dataset::new(
            2,
            vec![0.0, 1.0, f32::NAN, 2.0],
            vec![NodeAttrs::default(); 2],
        )
        .unwrap_err();
        assert_eq!(err, Error::NonFinite { node: 1 });
    }

    #[test]
    fn rejects_ragged_data() {
        assert!(Dataset::new(3, vec![0.0; 4], vec![NodeAttrs::default(); 1]).is_err());
    }

    #[test]
    fn row_access() {
        let d = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.row(NodeId(1)), &[3.0, 4.0]);
        assert_eq!(d.attrs(NodeId(1)).id, 1);
    }
}
