//! Gossip network model: a finite directed graph whose edges carry
//! independent Poisson clocks, with node 0 acting as the source.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::subset::{NodeId, NodeSubset, MAX_NODES, SOURCE};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("malformed network document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("network must have at least one non-source node")]
    NoNodes,
    #[error("network has {0} nodes, at most {MAX_NODES} are supported")]
    TooManyNodes(usize),
    #[error("edge #{index} ({from} -> 0): edge into source")]
    EdgeIntoSource { index: usize, from: NodeId },
    #[error("edge #{index} ({node} -> {node}): self-loop")]
    SelfLoop { index: usize, node: NodeId },
    #[error("edge #{index} ({from} -> {to}): unknown node id {node}, valid ids are 0..={max}")]
    UnknownNode {
        index: usize,
        from: NodeId,
        to: NodeId,
        node: NodeId,
        max: NodeId,
    },
    #[error("edge #{index} ({from} -> {to}): rate must be positive and finite, got {rate}")]
    BadRate {
        index: usize,
        from: NodeId,
        to: NodeId,
        rate: f64,
    },
}

/// On-disk network document: `{"nodes": N, "edges": [{"from", "to", "rate"}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub nodes: usize,
    pub edges: Vec<EdgeConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeConfig {
    pub from: NodeId,
    pub to: NodeId,
    pub rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub rate: f64,
}

impl Edge {
    pub fn is_source_edge(&self) -> bool {
        self.from == SOURCE
    }
}

/// An edge `(from, to)` with `from` outside `S ∪ {0}` and `to` inside `S`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub rate: f64,
}

/// Validated, immutable gossip network.
///
/// Edges are stored once per ordered pair, sorted by `(from, to)`; every
/// iteration order exposed by this type follows that sort.
#[derive(Clone, Debug, PartialEq)]
pub struct GossipNetwork {
    nodes: usize,
    edges: Vec<Edge>,
    // edges[out_offsets[u]..out_offsets[u + 1]] leave node u
    out_offsets: Vec<usize>,
    source_rates: Vec<f64>,
}

impl GossipNetwork {
    /// Validates the edge list and merges parallel edges by summing their
    /// rates (superposition of independent Poisson clocks).
    pub fn new(nodes: usize, edges: impl IntoIterator<Item = EdgeConfig>) -> Result<Self, NetworkError> {
        if nodes == 0 {
            return Err(NetworkError::NoNodes);
        }
        if nodes > MAX_NODES {
            return Err(NetworkError::TooManyNodes(nodes));
        }
        let mut merged: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
        for (index, EdgeConfig { from, to, rate }) in edges.into_iter().enumerate() {
            for node in [from, to] {
                if node > nodes {
                    return Err(NetworkError::UnknownNode { index, from, to, node, max: nodes });
                }
            }
            if to == SOURCE {
                return Err(NetworkError::EdgeIntoSource { index, from });
            }
            if from == to {
                return Err(NetworkError::SelfLoop { index, node: from });
            }
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(NetworkError::BadRate { index, from, to, rate });
            }
            *merged.entry((from, to)).or_insert(0.0) += rate;
        }

        let edges: Vec<Edge> = merged
            .into_iter()
            .map(|((from, to), rate)| Edge { from, to, rate })
            .collect();
        let mut out_offsets = vec![0; nodes + 2];
        for e in &edges {
            out_offsets[e.from + 1] += 1;
        }
        for u in 0..=nodes {
            out_offsets[u + 1] += out_offsets[u];
        }
        let mut source_rates = vec![0.0; nodes + 1];
        for e in edges.iter().filter(|e| e.is_source_edge()) {
            source_rates[e.to] = e.rate;
        }
        Ok(GossipNetwork { nodes, edges, out_offsets, source_rates })
    }

    pub fn from_config(config: NetworkConfig) -> Result<Self, NetworkError> {
        Self::new(config.nodes, config.edges)
    }

    /// Parses and validates a JSON network document.
    pub fn from_json(document: &str) -> Result<Self, NetworkError> {
        Self::from_config(serde_json::from_str(document)?)
    }

    pub fn to_config(&self) -> NetworkConfig {
        NetworkConfig {
            nodes: self.nodes,
            edges: self
                .edges
                .iter()
                .map(|e| EdgeConfig { from: e.from, to: e.to, rate: e.rate })
                .collect(),
        }
    }

    /// Number of non-source nodes `N`; node ids are `0..=N`.
    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_edges(&self, u: NodeId) -> &[Edge] {
        &self.edges[self.out_offsets[u]..self.out_offsets[u + 1]]
    }

    /// Rate of the source edge `0 -> v`, zero if absent.
    pub fn source_rate_to(&self, v: NodeId) -> f64 {
        self.source_rates[v]
    }

    /// Sum of all edge rates.
    pub fn total_rate(&self) -> f64 {
        self.edges.iter().map(|e| e.rate).sum()
    }

    /// Returns a copy with every rate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> GossipNetwork {
        assert!(factor > 0.0 && factor.is_finite());
        let edges = self
            .edges
            .iter()
            .map(|e| EdgeConfig { from: e.from, to: e.to, rate: e.rate * factor });
        GossipNetwork::new(self.nodes, edges).expect("scaling preserves validity")
    }

    /// Checks that every member of `subset` is a node of this network.
    pub fn contains_subset(&self, subset: NodeSubset) -> bool {
        subset.is_subset_of(NodeSubset::full(self.nodes))
    }

    /// `λ_u(S)`: the total rate from `u` into `subset`, or zero when `u` is a
    /// member of `subset`.
    pub fn rate_into(&self, u: NodeId, subset: NodeSubset) -> f64 {
        if subset.contains(u) {
            return 0.0;
        }
        self.out_edges(u)
            .iter()
            .filter(|e| subset.contains(e.to))
            .map(|e| e.rate)
            .sum()
    }

    /// `λ_0(S)`: total source rate into `subset`.
    pub fn source_rate(&self, subset: NodeSubset) -> f64 {
        self.rate_into(SOURCE, subset)
    }

    /// In-edge boundary of `subset`, excluding source edges, sorted by
    /// `(from, to)`.
    pub fn boundary_edges(&self, subset: NodeSubset) -> Vec<BoundaryEdge> {
        self.boundary_iter(subset)
            .map(|e| BoundaryEdge { from: e.from, to: e.to, rate: e.rate })
            .collect()
    }

    pub(crate) fn relay_edges(&self) -> &[Edge] {
        &self.edges[self.out_offsets[1]..]
    }

    pub(crate) fn boundary_iter(&self, subset: NodeSubset) -> impl Iterator<Item = &Edge> + '_ {
        self.relay_edges()
            .iter()
            .filter(move |e| subset.contains(e.to) && !subset.contains(e.from))
    }

    /// Non-source nodes outside `subset` with at least one edge into it.
    pub fn in_neighbors(&self, subset: NodeSubset) -> NodeSubset {
        self.boundary_iter(subset).map(|e| e.from).collect()
    }

    /// Nodes reachable from the source along directed edges.
    pub fn reachable_from_source(&self) -> NodeSubset {
        let mut seen = NodeSubset::EMPTY;
        let mut stack = vec![SOURCE];
        while let Some(u) = stack.pop() {
            for e in self.out_edges(u) {
                if !seen.contains(e.to) {
                    seen = seen.with(e.to);
                    stack.push(e.to);
                }
            }
        }
        seen
    }
}
