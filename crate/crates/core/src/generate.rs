//! Random gossip networks for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::network::{EdgeConfig, GossipNetwork};
use crate::subset::SOURCE;

/// Shape of a random network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomNetworkSpec {
    pub nodes: usize,
    /// Probability of each additional ordered pair `(u, v)`, `v ≠ 0`.
    pub edge_probability: f64,
    pub min_rate: f64,
    pub max_rate: f64,
    /// Guarantee every node is reachable from the source by first laying
    /// down a random arborescence rooted at node 0.
    pub reachable: bool,
}

impl RandomNetworkSpec {
    pub fn new(nodes: usize) -> Self {
        RandomNetworkSpec { nodes, edge_probability: 0.3, min_rate: 0.2, max_rate: 5.0, reachable: true }
    }
}

pub fn random_network<R: Rng + ?Sized>(spec: &RandomNetworkSpec, rng: &mut R) -> GossipNetwork {
    let rate = |rng: &mut R| rng.random_range(spec.min_rate..=spec.max_rate);
    let mut edges = Vec::new();
    let mut present = vec![vec![false; spec.nodes + 1]; spec.nodes + 1];
    if spec.reachable {
        let mut order: Vec<usize> = (1..=spec.nodes).collect();
        order.shuffle(rng);
        for (i, &v) in order.iter().enumerate() {
            let parent = match rng.random_range(0..=i) {
                0 => SOURCE,
                p => order[p - 1],
            };
            present[parent][v] = true;
            edges.push(EdgeConfig { from: parent, to: v, rate: rate(rng) });
        }
    }
    for u in 0..=spec.nodes {
        for v in 1..=spec.nodes {
            if u != v && !present[u][v] && rng.random_bool(spec.edge_probability) {
                present[u][v] = true;
                edges.push(EdgeConfig { from: u, to: v, rate: rate(rng) });
            }
        }
    }
    GossipNetwork::new(spec.nodes, edges).expect("generated network is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subset::NodeSubset;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reachable_networks_are_reachable() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for nodes in 1..=8 {
            for _ in 0..20 {
                let net = random_network(&RandomNetworkSpec::new(nodes), &mut rng);
                assert_eq!(net.reachable_from_source(), NodeSubset::full(nodes));
                assert!(net.edges().iter().all(|e| (0.2..=5.0).contains(&e.rate)));
            }
        }
    }
}
