//! Exact age moments by recursion over supersets.
//!
//! For a subset `S` with in-boundary `E(S)` (non-source edges entering `S`)
//! and total incoming rate `D = λ_0(S) + Σ_{e∈E(S)} λ_e`,
//!
//! ```text
//! v_S^k = (k · v_S^{k-1} + Σ_{e∈E(S)} λ_e · v_{S∪e}^k) / D,    v_S^0 = 1.
//! ```
//!
//! `v_S^k` is the stationary `k`th moment of the minimum age over `S`, which
//! equals the `k`th moment of the first passage time from the source to `S`
//! under independent `Exp(λ_e)` edge weights. The recursion only refers to
//! strictly larger subsets and bottoms out where `E(S)` is empty. A zero
//! denominator means `S` can never be updated and yields `+∞`.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::exec::Execution;
use crate::network::GossipNetwork;
use crate::subset::NodeSubset;

/// Highest supported moment order.
pub const MAX_ORDER: usize = 20;

/// Largest network for which [`solve_all`] enumerates every subset.
pub const EXHAUSTIVE_NODE_CAP: usize = 20;

/// Default bound on the number of memoized subsets for per-subset queries.
pub const DEFAULT_MEMO_LIMIT: usize = 1 << 22;

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("subset must be non-empty")]
    EmptySubset,
    #[error("subset {0} contains nodes outside the network")]
    UnknownNodes(String),
    #[error("moment order must be in 1..={MAX_ORDER}, got {0}")]
    OrderOutOfRange(usize),
    #[error("exhaustive solve supports at most {cap} nodes, network has {nodes}")]
    TooManyNodes { nodes: usize, cap: usize },
    #[error("memo table exceeded {limit} subsets; raise the limit or query a larger subset")]
    MemoLimit { limit: usize },
}

/// Moment vector `(v^0, …, v^K)` for one subset plus the supersets whose
/// recursion hit a zero denominator.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub moments: Vec<f64>,
    pub zero_denominator: Vec<NodeSubset>,
}

/// Single recursion step shared by every solver route. `supersets` must
/// already hold the moment vectors of each `S ∪ {from}` for the boundary
/// edges of `subset`. Returns `false` if the denominator vanished.
fn recurrence_step<'s>(
    net: &GossipNetwork,
    subset: NodeSubset,
    supersets: impl Fn(NodeSubset) -> &'s [f64],
    out: &mut [f64],
) -> bool {
    let order = out.len() - 1;
    out.fill(0.0);
    let mut boundary_rate = 0.0;
    for e in net.boundary_iter(subset) {
        let sup = supersets(subset.with(e.from));
        boundary_rate += e.rate;
        for k in 1..=order {
            out[k] += e.rate * sup[k];
        }
    }
    let denominator = net.source_rate(subset) + boundary_rate;
    out[0] = 1.0;
    if denominator == 0.0 {
        out[1..].fill(f64::INFINITY);
        return false;
    }
    for k in 1..=order {
        out[k] = (k as f64 * out[k - 1] + out[k]) / denominator;
    }
    true
}

fn check_order(order: usize) -> Result<(), SolveError> {
    if order == 0 || order > MAX_ORDER {
        Err(SolveError::OrderOutOfRange(order))
    } else {
        Ok(())
    }
}

fn check_subset(net: &GossipNetwork, subset: NodeSubset) -> Result<(), SolveError> {
    if subset.is_empty() {
        Err(SolveError::EmptySubset)
    } else if !net.contains_subset(subset) {
        Err(SolveError::UnknownNodes(subset.to_string()))
    } else {
        Ok(())
    }
}

/// On-demand memoized solver. Only the supersets actually reached from the
/// queried subsets are evaluated, and the memo is kept across queries.
pub struct MomentSolver<'a> {
    net: &'a GossipNetwork,
    order: usize,
    memo: HashMap<NodeSubset, Box<[f64]>>,
    memo_limit: usize,
    zero_denominator: BTreeSet<NodeSubset>,
}

impl<'a> MomentSolver<'a> {
    pub fn new(net: &'a GossipNetwork, order: usize) -> Result<Self, SolveError> {
        check_order(order)?;
        Ok(MomentSolver {
            net,
            order,
            memo: HashMap::new(),
            memo_limit: DEFAULT_MEMO_LIMIT,
            zero_denominator: BTreeSet::new(),
        })
    }

    pub fn with_memo_limit(mut self, limit: usize) -> Self {
        self.memo_limit = limit;
        self
    }

    /// `(v_S^0, …, v_S^K)`.
    pub fn moments(&mut self, subset: NodeSubset) -> Result<&[f64], SolveError> {
        check_subset(self.net, subset)?;
        self.ensure(subset)?;
        Ok(&self.memo[&subset])
    }

    /// Subsets evaluated so far whose total incoming rate was zero.
    pub fn zero_denominator_supersets(&self) -> Vec<NodeSubset> {
        self.zero_denominator.iter().copied().collect()
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    fn ensure(&mut self, subset: NodeSubset) -> Result<(), SolveError> {
        if self.memo.contains_key(&subset) {
            return Ok(());
        }
        let net = self.net;
        for e in net.boundary_iter(subset) {
            self.ensure(subset.with(e.from))?;
        }
        if self.memo.len() >= self.memo_limit {
            return Err(SolveError::MemoLimit { limit: self.memo_limit });
        }
        let mut row = vec![0.0; self.order + 1];
        let memo = &self.memo;
        if !recurrence_step(net, subset, |s| &memo[&s], &mut row) {
            self.zero_denominator.insert(subset);
        }
        self.memo.insert(subset, row.into_boxed_slice());
        Ok(())
    }
}

/// `(v_S^0, …, v_S^K)` for a single subset.
pub fn solve_moments(net: &GossipNetwork, subset: NodeSubset, order: usize) -> Result<Solution, SolveError> {
    let mut solver = MomentSolver::new(net, order)?;
    let moments = solver.moments(subset)?.to_vec();
    Ok(Solution { moments, zero_denominator: solver.zero_denominator_supersets() })
}

/// Stationary mean of the minimum age over `subset`.
pub fn expected_age(net: &GossipNetwork, subset: NodeSubset) -> Result<f64, SolveError> {
    Ok(solve_moments(net, subset, 1)?.moments[1])
}

/// First-moment recursion on its own,
/// `v_S = (1 + Σ_{e∈E(S)} λ_e v_{S∪e}) / (λ_0(S) + Σ_{e∈E(S)} λ_e)`.
pub fn first_moment(net: &GossipNetwork, subset: NodeSubset) -> Result<f64, SolveError> {
    fn go(net: &GossipNetwork, s: NodeSubset, memo: &mut HashMap<NodeSubset, f64>) -> f64 {
        if let Some(&v) = memo.get(&s) {
            return v;
        }
        let mut weighted = 0.0;
        let mut boundary_rate = 0.0;
        for e in net.boundary_iter(s) {
            weighted += e.rate * go(net, s.with(e.from), memo);
            boundary_rate += e.rate;
        }
        let denominator = net.source_rate(s) + boundary_rate;
        let v = if denominator == 0.0 { f64::INFINITY } else { (1.0 + weighted) / denominator };
        memo.insert(s, v);
        v
    }
    check_subset(net, subset)?;
    Ok(go(net, subset, &mut HashMap::new()))
}

/// First moment via the node-indexed form,
/// `v_S = (1 + Σ_{u∉S} λ_u(S) v_{S∪{u}}) / (λ_0(S) + Σ_{u∉S} λ_u(S))`,
/// which groups boundary edges by their tail node.
pub fn first_moment_by_neighbors(net: &GossipNetwork, subset: NodeSubset) -> Result<f64, SolveError> {
    fn go(net: &GossipNetwork, s: NodeSubset, memo: &mut HashMap<NodeSubset, f64>) -> f64 {
        if let Some(&v) = memo.get(&s) {
            return v;
        }
        let mut weighted = 0.0;
        let mut rate = 0.0;
        for u in net.in_neighbors(s).iter() {
            let lambda = net.rate_into(u, s);
            weighted += lambda * go(net, s.with(u), memo);
            rate += lambda;
        }
        let denominator = net.source_rate(s) + rate;
        let v = if denominator == 0.0 { f64::INFINITY } else { (1.0 + weighted) / denominator };
        memo.insert(s, v);
        v
    }
    check_subset(net, subset)?;
    Ok(go(net, subset, &mut HashMap::new()))
}

/// Moment vectors for every non-empty subset of a network.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    nodes: usize,
    order: usize,
    // row for dense subset index i at values[i * (order + 1)..]; row 0 unused
    values: Vec<f64>,
    zero_denominator: Vec<NodeSubset>,
}

impl MomentTable {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn len(&self) -> usize {
        (1 << self.nodes) - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(v_S^0, …, v_S^K)`. Panics on the empty set or foreign nodes.
    pub fn get(&self, subset: NodeSubset) -> &[f64] {
        assert!(!subset.is_empty() && subset.is_subset_of(NodeSubset::full(self.nodes)));
        let w = self.order + 1;
        &self.values[subset.index() * w..][..w]
    }

    /// Entries in increasing subset-mask order.
    pub fn iter(&self) -> impl Iterator<Item = (NodeSubset, &[f64])> + '_ {
        NodeSubset::all_nonempty(self.nodes).map(move |s| (s, self.get(s)))
    }

    pub fn zero_denominator_supersets(&self) -> &[NodeSubset] {
        &self.zero_denominator
    }
}

/// Evaluates every non-empty subset, sweeping from the full node set down
/// by subset size. Subsets of equal size are independent and may be
/// computed in parallel.
pub fn solve_all(net: &GossipNetwork, order: usize, exec: Execution) -> Result<MomentTable, SolveError> {
    check_order(order)?;
    let nodes = net.node_count();
    if nodes > EXHAUSTIVE_NODE_CAP {
        return Err(SolveError::TooManyNodes { nodes, cap: EXHAUSTIVE_NODE_CAP });
    }
    let w = order + 1;
    let count = 1usize << nodes;
    let mut values = vec![0.0; count * w];
    let mut zero_denominator = Vec::new();

    let mut by_size: Vec<Vec<NodeSubset>> = vec![Vec::new(); nodes + 1];
    for s in NodeSubset::all_nonempty(nodes) {
        by_size[s.len()].push(s);
    }
    for level in by_size.iter().skip(1).rev() {
        let rows = {
            let table = &values;
            exec.map(level, |&s| {
                let mut row = vec![0.0; w];
                let ok = recurrence_step(net, s, |sup| &table[sup.index() * w..][..w], &mut row);
                (row, ok)
            })
        };
        for (&s, (row, ok)) in level.iter().zip(rows) {
            values[s.index() * w..][..w].copy_from_slice(&row);
            if !ok {
                zero_denominator.push(s);
            }
        }
    }
    zero_denominator.sort();
    Ok(MomentTable { nodes, order, values, zero_denominator })
}
