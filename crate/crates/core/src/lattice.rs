//! First passage percolation on finite `ℓ1` balls of `Z^d`.
//!
//! Every nearest-neighbour edge of the box `Z^d_ℓ = {x : ‖x‖₁ ≤ ℓ}` carries an
//! independent `Exp(1)` weight. Grow a cluster `S` from the origin: each edge
//! leaving `S` fires at rate 1, so with `E(S)` the edges with exactly one
//! endpoint in `S`,
//!
//! ```text
//! v_S = (1 + Σ_{e∈E(S)} v_{S∪e}) / |E(S)|,
//! ```
//!
//! and `v_S = 0` as soon as the cluster touches the boundary `‖x‖₁ = ℓ`.
//! `v_{{0}}` is the expected first passage time from the origin to the
//! boundary.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::exec::Execution;
use crate::fpp::exponential;
use crate::shortest_path::{Adjacency, Dijkstra};
use crate::stats::{MomentAccumulator, MomentEstimate};

/// Largest interior for the exact recursion; the memo is keyed by subsets
/// of the interior.
pub const RECURSION_INTERIOR_CAP: usize = 22;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("radius must be at least 1")]
    ZeroRadius,
    #[error("box has {interior} interior vertices, the exact recursion supports at most {RECURSION_INTERIOR_CAP}")]
    RecursionCap { interior: usize },
    #[error("vertex set must be non-empty")]
    EmptySet,
    #[error("vertex index {0} is outside the box")]
    UnknownVertex(usize),
    #[error("at least two samples are required, got {0}")]
    TooFewSamples(u64),
}

/// The ball `Z^d_ℓ` with nearest-neighbour edges.
///
/// Vertices are sorted by `(‖x‖₁, x)` so the origin is vertex 0 and the
/// interior `‖x‖₁ < ℓ` occupies indices `0..interior_count()`.
#[derive(Clone, Debug)]
pub struct LatticeBox {
    d: usize,
    ell: usize,
    points: Vec<Vec<i32>>,
    index: HashMap<Vec<i32>, usize>,
    edges: Vec<(usize, usize)>,
    interior: usize,
    neighbors: Vec<Vec<usize>>,
}

fn norm(p: &[i32]) -> usize {
    p.iter().map(|x| x.unsigned_abs() as usize).sum()
}

fn ball_points(d: usize, radius: i32, prefix: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
    if prefix.len() == d {
        out.push(prefix.clone());
        return;
    }
    let used: i32 = prefix.iter().map(|x| x.abs()).sum();
    let left = radius - used;
    for x in -left..=left {
        prefix.push(x);
        ball_points(d, radius, prefix, out);
        prefix.pop();
    }
}

/// Builds `Z^d_ℓ`. The exact recursion additionally needs the interior to
/// fit [`RECURSION_INTERIOR_CAP`]; Monte Carlo does not.
pub fn build_box(d: usize, ell: usize) -> Result<LatticeBox, LatticeError> {
    if d == 0 {
        return Err(LatticeError::ZeroDimension);
    }
    if ell == 0 {
        return Err(LatticeError::ZeroRadius);
    }
    let mut points = Vec::new();
    ball_points(d, ell as i32, &mut Vec::with_capacity(d), &mut points);
    points.sort_by(|a, b| norm(a).cmp(&norm(b)).then_with(|| a.cmp(b)));
    let index: HashMap<Vec<i32>, usize> = points.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let interior = points.iter().take_while(|p| norm(p) < ell).count();

    let mut edges = Vec::new();
    let mut neighbors = vec![Vec::new(); points.len()];
    for (i, p) in points.iter().enumerate() {
        for axis in 0..d {
            for step in [-1, 1] {
                let mut q = p.clone();
                q[axis] += step;
                if let Some(&j) = index.get(&q) {
                    neighbors[i].push(j);
                    if i < j {
                        edges.push((i, j));
                    }
                }
            }
        }
    }
    edges.sort_unstable();
    Ok(LatticeBox { d, ell, points, index, edges, interior, neighbors })
}

impl LatticeBox {
    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> usize {
        self.ell
    }

    pub fn vertex_count(&self) -> usize {
        self.points.len()
    }

    pub fn interior_count(&self) -> usize {
        self.interior
    }

    pub fn point(&self, vertex: usize) -> &[i32] {
        &self.points[vertex]
    }

    pub fn vertex(&self, point: &[i32]) -> Option<usize> {
        self.index.get(point).copied()
    }

    pub fn is_boundary(&self, vertex: usize) -> bool {
        vertex >= self.interior
    }

    /// Undirected edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, vertex: usize) -> usize {
        self.neighbors[vertex].len()
    }
}

/// Memoized growth recursion on one box.
pub struct BoxRecursion<'a> {
    lattice: &'a LatticeBox,
    memo: HashMap<u64, f64>,
}

impl<'a> BoxRecursion<'a> {
    pub fn new(lattice: &'a LatticeBox) -> Result<Self, LatticeError> {
        if lattice.interior > RECURSION_INTERIOR_CAP {
            return Err(LatticeError::RecursionCap { interior: lattice.interior });
        }
        Ok(BoxRecursion { lattice, memo: HashMap::new() })
    }

    /// `v_{ℓ,S}` for a set of vertex indices; zero if `S` already touches
    /// the boundary.
    pub fn value(&mut self, vertices: &[usize]) -> Result<f64, LatticeError> {
        if vertices.is_empty() {
            return Err(LatticeError::EmptySet);
        }
        let mut mask = 0u64;
        for &v in vertices {
            if v >= self.lattice.vertex_count() {
                return Err(LatticeError::UnknownVertex(v));
            }
            if self.lattice.is_boundary(v) {
                return Ok(0.0);
            }
            mask |= 1 << v;
        }
        Ok(self.eval(mask))
    }

    /// Number of distinct clusters evaluated so far.
    pub fn states(&self) -> usize {
        self.memo.len()
    }

    fn eval(&mut self, cluster: u64) -> f64 {
        if let Some(&v) = self.memo.get(&cluster) {
            return v;
        }
        let lattice = self.lattice;
        let mut boundary_edges = 0usize;
        let mut sum = 0.0;
        let mut members = cluster;
        while members != 0 {
            let v = members.trailing_zeros() as usize;
            members &= members - 1;
            for &w in &lattice.neighbors[v] {
                if lattice.is_boundary(w) {
                    boundary_edges += 1;
                } else if cluster >> w & 1 == 0 {
                    boundary_edges += 1;
                    sum += self.eval(cluster | 1 << w);
                }
            }
        }
        // every interior vertex has 2d neighbours in the box, so the
        // cluster always has outgoing edges
        let value = (1.0 + sum) / boundary_edges as f64;
        self.memo.insert(cluster, value);
        value
    }
}

/// `v_{ℓ,S}` on `lattice`.
pub fn box_recursion(lattice: &LatticeBox, vertices: &[usize]) -> Result<f64, LatticeError> {
    BoxRecursion::new(lattice)?.value(vertices)
}

/// `v_{ℓ,{0}}` with and without normalization by `ℓ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeConstant {
    pub raw: f64,
    pub normalized: f64,
}

pub fn time_constant_estimate(d: usize, ell: usize) -> Result<TimeConstant, LatticeError> {
    let lattice = build_box(d, ell)?;
    let raw = box_recursion(&lattice, &[0])?;
    Ok(TimeConstant { raw, normalized: raw / ell as f64 })
}

/// Monte Carlo first passage time from the origin to the boundary of
/// `Z^d_ℓ` with i.i.d. `Exp(1)` weights on undirected edges.
pub fn mc_boundary_passage(
    d: usize,
    ell: usize,
    samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<MomentEstimate, LatticeError> {
    if samples < 2 {
        return Err(LatticeError::TooFewSamples(samples));
    }
    let lattice = build_box(d, ell)?;
    let arcs = lattice
        .edges
        .iter()
        .enumerate()
        .flat_map(|(i, &(a, b))| [(a, b, i), (b, a, i)]);
    let adj = Adjacency::from_arcs(lattice.vertex_count(), arcs);
    let interior = lattice.interior;
    let edge_count = lattice.edges.len();
    let (acc, _, _) = exec.replicate(
        samples,
        seed,
        || (MomentAccumulator::new(1), Dijkstra::default(), Vec::with_capacity(edge_count)),
        |rng, _, (acc, dijkstra, weights)| {
            weights.clear();
            weights.extend((0..edge_count).map(|_| exponential(rng, 1.0)));
            let (_, t) = dijkstra.run(&adj, weights, 0, |v| v >= interior).expect("boundary is reachable");
            acc.push(t);
        },
        |total, part| total.0.merge(&part.0),
    );
    Ok(acc.estimates()[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    // lattice points with ‖x‖₁ ≤ r in d dimensions
    fn ball_count(d: usize, r: usize) -> usize {
        (0..=d.min(r)).map(|k| (1 << k) * binomial(d, k) * binomial(r, k)).sum()
    }

    #[test]
    fn small_boxes() {
        let b = build_box(1, 1).unwrap();
        assert_eq!(b.vertex_count(), 3);
        assert_eq!(b.point(0), &[0]);
        assert!(b.is_boundary(1) && b.is_boundary(2));

        let b = build_box(2, 1).unwrap();
        assert_eq!(b.vertex_count(), 5);
        assert_eq!(b.edges().len(), 4);
        assert_eq!(b.degree(0), 4);

        let b = build_box(2, 2).unwrap();
        assert_eq!(b.vertex_count(), 13);
        assert_eq!(b.interior_count(), 5);
    }

    #[test]
    fn vertex_counts_and_degrees() {
        for d in 1..=4 {
            for ell in 1..=4 {
                let b = build_box(d, ell).unwrap();
                assert_eq!(b.vertex_count(), ball_count(d, ell));
                assert_eq!(b.interior_count(), ball_count(d, ell - 1));
                for v in 0..b.interior_count() {
                    assert_eq!(b.degree(v), 2 * d);
                }
                assert_eq!(b.vertex(b.point(7.min(b.vertex_count() - 1))), Some(7.min(b.vertex_count() - 1)));
            }
        }
    }

    #[test]
    fn argument_errors() {
        assert_eq!(build_box(0, 1).unwrap_err(), LatticeError::ZeroDimension);
        assert_eq!(build_box(1, 0).unwrap_err(), LatticeError::ZeroRadius);
        let big = build_box(2, 4).unwrap();
        assert_eq!(box_recursion(&big, &[0]).unwrap_err(), LatticeError::RecursionCap { interior: 25 });
        let b = build_box(1, 2).unwrap();
        assert_eq!(box_recursion(&b, &[]).unwrap_err(), LatticeError::EmptySet);
        assert_eq!(box_recursion(&b, &[9]).unwrap_err(), LatticeError::UnknownVertex(9));
        assert_eq!(mc_boundary_passage(1, 1, 1, 0, Execution::Sequential), Err(LatticeError::TooFewSamples(1)));
    }

    #[test]
    fn recursion_small_values() {
        assert_eq!(box_recursion(&build_box(1, 1).unwrap(), &[0]).unwrap(), 0.5);
        assert_eq!(box_recursion(&build_box(2, 1).unwrap(), &[0]).unwrap(), 0.25);
        assert_eq!(box_recursion(&build_box(1, 2).unwrap(), &[0]).unwrap(), 1.25);
        let touching = build_box(1, 2).unwrap();
        let edge = touching.vertex(&[2]).unwrap();
        assert_eq!(box_recursion(&touching, &[0, edge]).unwrap(), 0.0);
    }

    #[test]
    fn time_constant_normalization() {
        assert_eq!(time_constant_estimate(1, 1).unwrap(), TimeConstant { raw: 0.5, normalized: 0.5 });
        assert_eq!(time_constant_estimate(1, 2).unwrap(), TimeConstant { raw: 1.25, normalized: 0.625 });
    }
}
