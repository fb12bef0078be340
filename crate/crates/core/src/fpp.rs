//! First passage percolation oracle.
//!
//! The dual graph keeps the network's vertices and directed edges and gives
//! edge `e` a static weight `Exp(λ_e)`. The stationary minimum age of a
//! subset `S` is distributed as the first passage time from the source to
//! `S`, so Monte Carlo over weight samples estimates the same moments the
//! recursion computes exactly.

use rand::Rng;
use thiserror::Error;

use crate::exec::Execution;
use crate::moments::MAX_ORDER;
use crate::network::GossipNetwork;
use crate::shortest_path::{Adjacency, Dijkstra};
use crate::stats::{MomentAccumulator, MomentEstimate};
use crate::subset::{NodeSubset, SOURCE};

#[derive(Debug, Error, PartialEq)]
pub enum FppError {
    #[error("subset must be non-empty")]
    EmptySubset,
    #[error("subset {0} contains nodes outside the network")]
    UnknownNodes(String),
    #[error("moment order must be in 1..={MAX_ORDER}, got {0}")]
    OrderOutOfRange(usize),
    #[error("at least two samples are required, got {0}")]
    TooFewSamples(u64),
    #[error("subset {subset} is unreachable from the source in {count} samples")]
    Unreachable { subset: String, count: u64 },
}

/// Draws `Exp(rate)` by inverse transform, `-ln(U) / rate` with `U` uniform
/// on `(0, 1]`.
pub fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    -u.ln() / rate
}

/// One realization of the dual graph's edge weights, indexed like
/// [`GossipNetwork::edges`].
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSample {
    weights: Vec<f64>,
}

impl WeightSample {
    /// Wraps explicit weights. Panics if the length does not match the
    /// network's edge count or a weight is negative.
    pub fn from_weights(net: &GossipNetwork, weights: Vec<f64>) -> Self {
        assert_eq!(weights.len(), net.edges().len(), "one weight per edge");
        assert!(weights.iter().all(|w| *w >= 0.0), "weights must be nonnegative");
        WeightSample { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Independent `Exp(λ_e)` weight for every edge, drawn in edge order.
pub fn sample_weights<R: Rng + ?Sized>(net: &GossipNetwork, rng: &mut R) -> WeightSample {
    let mut weights = Vec::with_capacity(net.edges().len());
    fill_weights(net, rng, &mut weights);
    WeightSample { weights }
}

fn fill_weights<R: Rng + ?Sized>(net: &GossipNetwork, rng: &mut R, out: &mut Vec<f64>) {
    out.clear();
    out.extend(net.edges().iter().map(|e| exponential(rng, e.rate)));
}

pub(crate) fn dual_graph(net: &GossipNetwork) -> Adjacency {
    let arcs = net.edges().iter().enumerate().map(|(i, e)| (e.from, e.to, i));
    Adjacency::from_arcs(net.node_count() + 1, arcs)
}

/// `T(0, S)`: minimum over `v ∈ S` of the shortest directed path weight from
/// the source, `+∞` if no member is reachable.
pub fn first_passage_time(net: &GossipNetwork, sample: &WeightSample, subset: NodeSubset) -> f64 {
    let adj = dual_graph(net);
    Dijkstra::default()
        .run(&adj, &sample.weights, SOURCE, |v| subset.contains(v))
        .map_or(f64::INFINITY, |(_, d)| d)
}

/// First passage time from the source to every node (index 0 is the source
/// itself).
pub fn passage_times(net: &GossipNetwork, sample: &WeightSample) -> Vec<f64> {
    let adj = dual_graph(net);
    let mut dijkstra = Dijkstra::default();
    dijkstra.run(&adj, &sample.weights, SOURCE, |_| false);
    dijkstra.distances().to_vec()
}

fn subset_min(dist: &[f64], subset: NodeSubset) -> f64 {
    subset.iter().map(|v| dist[v]).fold(f64::INFINITY, f64::min)
}

fn validate(net: &GossipNetwork, subsets: &[NodeSubset], order: usize, samples: u64) -> Result<(), FppError> {
    if order == 0 || order > MAX_ORDER {
        return Err(FppError::OrderOutOfRange(order));
    }
    if samples < 2 {
        return Err(FppError::TooFewSamples(samples));
    }
    for &s in subsets {
        if s.is_empty() {
            return Err(FppError::EmptySubset);
        }
        if !net.contains_subset(s) {
            return Err(FppError::UnknownNodes(s.to_string()));
        }
    }
    Ok(())
}

struct Batch {
    acc: Vec<MomentAccumulator>,
    dijkstra: Dijkstra,
    weights: Vec<f64>,
}

/// Raw moments `k = 1..=K` of `T(0, S)` over `samples` independent weight
/// samples. Replica `i` draws from stream `i` of `seed`, so results depend
/// only on `(seed, samples)`.
pub fn estimate_moments(
    net: &GossipNetwork,
    subset: NodeSubset,
    order: usize,
    samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<Vec<MomentEstimate>, FppError> {
    validate(net, &[subset], order, samples)?;
    let adj = dual_graph(net);
    let batch = exec.replicate(
        samples,
        seed,
        || Batch { acc: vec![MomentAccumulator::new(order)], dijkstra: Dijkstra::default(), weights: Vec::new() },
        |rng, _, b| {
            fill_weights(net, rng, &mut b.weights);
            let t = b
                .dijkstra
                .run(&adj, &b.weights, SOURCE, |v| subset.contains(v))
                .map_or(f64::INFINITY, |(_, d)| d);
            b.acc[0].push(t);
        },
        |total, part| total.acc[0].merge(&part.acc[0]),
    );
    finish(&[subset], &batch.acc).map(|mut v| v.remove(0))
}

/// Like [`estimate_moments`] for several subsets at once, sharing every
/// weight sample across them. Each subset's estimates are bit-identical to a
/// separate [`estimate_moments`] call with the same seed.
pub fn estimate_subsets(
    net: &GossipNetwork,
    subsets: &[NodeSubset],
    order: usize,
    samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<Vec<Vec<MomentEstimate>>, FppError> {
    validate(net, subsets, order, samples)?;
    let adj = dual_graph(net);
    let batch = exec.replicate(
        samples,
        seed,
        || Batch {
            acc: vec![MomentAccumulator::new(order); subsets.len()],
            dijkstra: Dijkstra::default(),
            weights: Vec::new(),
        },
        |rng, _, b| {
            fill_weights(net, rng, &mut b.weights);
            b.dijkstra.run(&adj, &b.weights, SOURCE, |_| false);
            let dist = b.dijkstra.distances();
            for (acc, &s) in b.acc.iter_mut().zip(subsets) {
                acc.push(subset_min(dist, s));
            }
        },
        |total, part| {
            for (t, p) in total.acc.iter_mut().zip(&part.acc) {
                t.merge(p);
            }
        },
    );
    finish(subsets, &batch.acc)
}

fn finish(subsets: &[NodeSubset], acc: &[MomentAccumulator]) -> Result<Vec<Vec<MomentEstimate>>, FppError> {
    subsets
        .iter()
        .zip(acc)
        .map(|(s, a)| {
            if a.infinite_count() > 0 {
                Err(FppError::Unreachable { subset: s.to_string(), count: a.infinite_count() })
            } else {
                Ok(a.estimates())
            }
        })
        .collect()
}
