//! Age of information in Poissonian gossip networks.
//!
//! A gossip network is a directed graph in which node 0 (the source) always
//! holds the current time and every edge `(u, v)` rings as an independent
//! Poisson clock of rate `λ_uv`, copying the fresher of the two timestamps
//! into `v`. The crate computes the stationary moments of the minimum age of
//! any node subset three independent ways:
//!
//! * [`moments`]: exact recursion over supersets,
//! * [`fpp`]: Monte Carlo over first passage times on the graph with
//!   `Exp(λ_e)` edge weights,
//! * [`sim`]: direct event-driven simulation of the gossip process.
//!
//! [`lattice`] applies the same growth recursion to first passage
//! percolation on finite `ℓ1` balls of `Z^d`.
//!
//! Monte Carlo drivers take an [`Execution`] and are reproducible for a given
//! seed regardless of thread count. The `parallel` feature (on by default)
//! enables rayon; without it the same drivers run sequentially.

pub mod exec;
pub mod fpp;
pub mod generate;
pub mod lattice;
pub mod moments;
pub mod network;
mod shortest_path;
pub mod sim;
pub mod stats;
pub mod subset;

pub use exec::Execution;
pub use network::{BoundaryEdge, Edge, GossipNetwork, NetworkConfig, NetworkError};
pub use stats::MomentEstimate;
pub use subset::{NodeId, NodeSubset, SOURCE};
