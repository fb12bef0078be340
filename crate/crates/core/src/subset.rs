use std::fmt;

use serde::{Deserialize, Serialize};

/// Largest node id a network may use. Subsets are `u64` bitmasks indexed by
/// node id, and bit 0 is reserved for the source.
pub const MAX_NODES: usize = 62;

/// Node identifier. `0` is always the source.
pub type NodeId = usize;

pub const SOURCE: NodeId = 0;

/// A set of non-source nodes, stored as a bitmask where bit `i` is node `i`.
///
/// Bit 0 is never set. Adding a node always yields a strictly larger mask,
/// which the solvers rely on when sweeping subsets from the top down.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeSubset(u64);

impl NodeSubset {
    pub const EMPTY: NodeSubset = NodeSubset(0);

    /// Builds a subset from raw bits. Returns `None` if bit 0 (the source)
    /// or any bit above [`MAX_NODES`] is set.
    pub fn from_bits(bits: u64) -> Option<Self> {
        if bits & 1 != 0 || bits >> (MAX_NODES + 1) != 0 {
            None
        } else {
            Some(NodeSubset(bits))
        }
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(node: NodeId) -> Self {
        assert!(node != SOURCE && node <= MAX_NODES, "invalid subset member {node}");
        NodeSubset(1 << node)
    }

    /// All nodes `1..=n`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_NODES);
        NodeSubset(((1u64 << n) - 1) << 1)
    }

    /// Dense index of a subset of `1..=n`, in `0..2^n`. Inverse of
    /// [`NodeSubset::from_index`].
    pub fn index(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn from_index(index: usize) -> Self {
        NodeSubset((index as u64) << 1)
    }

    /// Every non-empty subset of `1..=n`, in increasing mask order.
    pub fn all_nonempty(n: usize) -> impl Iterator<Item = NodeSubset> {
        (1..(1usize << n)).map(NodeSubset::from_index)
    }

    pub fn contains(self, node: NodeId) -> bool {
        node < 64 && self.0 >> node & 1 == 1
    }

    pub fn with(self, node: NodeId) -> Self {
        assert!(node != SOURCE && node <= MAX_NODES);
        NodeSubset(self.0 | 1 << node)
    }

    pub fn union(self, other: NodeSubset) -> Self {
        NodeSubset(self.0 | other.0)
    }

    pub fn is_subset_of(self, other: NodeSubset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Largest member, if any.
    pub fn max_node(self) -> Option<NodeId> {
        (self.0 != 0).then(|| 63 - self.0.leading_zeros() as usize)
    }

    /// Members in increasing order.
    pub fn iter(self) -> Members {
        Members(self.0)
    }
}

impl FromIterator<NodeId> for NodeSubset {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        iter.into_iter().fold(NodeSubset::EMPTY, NodeSubset::with)
    }
}

impl fmt::Debug for NodeSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Comma-separated sorted members, e.g. `1,2,5`.
impl fmt::Display for NodeSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for node in self.iter() {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{node}")?;
            first = false;
        }
        Ok(())
    }
}

pub struct Members(u64);

impl Iterator for Members {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        if self.0 == 0 {
            return None;
        }
        let node = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(node)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Members {}
