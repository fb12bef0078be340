use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Compressed adjacency: `targets[offsets[u]..offsets[u + 1]]` are the
/// `(neighbor, weight index)` pairs leaving `u`.
#[derive(Clone, Debug)]
pub(crate) struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<(usize, usize)>,
}

impl Adjacency {
    /// Builds from directed arcs `(from, to, weight index)`.
    pub(crate) fn from_arcs(nodes: usize, arcs: impl IntoIterator<Item = (usize, usize, usize)> + Clone) -> Self {
        let mut offsets = vec![0; nodes + 1];
        for (from, _, _) in arcs.clone() {
            offsets[from + 1] += 1;
        }
        for u in 0..nodes {
            offsets[u + 1] += offsets[u];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![(0, 0); offsets[nodes]];
        for (from, to, w) in arcs {
            targets[fill[from]] = (to, w);
            fill[from] += 1;
        }
        Adjacency { offsets, targets }
    }

    pub(crate) fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    fn neighbors(&self, u: usize) -> &[(usize, usize)] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on distance, ties to the smaller node id
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reusable Dijkstra buffers.
#[derive(Clone, Debug, Default)]
pub(crate) struct Dijkstra {
    dist: Vec<f64>,
    settled: Vec<bool>,
    heap: BinaryHeap<Entry>,
}

impl Dijkstra {
    /// Single-source shortest paths with nonnegative `weights`. Stops as
    /// soon as a node satisfying `is_target` is settled and returns it with
    /// its distance. With a target that never matches, every reachable node
    /// is settled and [`Dijkstra::distances`] holds the full result.
    pub(crate) fn run(
        &mut self,
        adj: &Adjacency,
        weights: &[f64],
        source: usize,
        mut is_target: impl FnMut(usize) -> bool,
    ) -> Option<(usize, f64)> {
        let n = adj.node_count();
        self.dist.clear();
        self.dist.resize(n, f64::INFINITY);
        self.settled.clear();
        self.settled.resize(n, false);
        self.heap.clear();

        self.dist[source] = 0.0;
        self.heap.push(Entry { dist: 0.0, node: source });
        while let Some(Entry { dist, node }) = self.heap.pop() {
            if self.settled[node] {
                continue;
            }
            self.settled[node] = true;
            if is_target(node) {
                return Some((node, dist));
            }
            for &(next, w) in adj.neighbors(node) {
                let candidate = dist + weights[w];
                if candidate < self.dist[next] {
                    self.dist[next] = candidate;
                    self.heap.push(Entry { dist: candidate, node: next });
                }
            }
        }
        None
    }

    pub(crate) fn distances(&self) -> &[f64] {
        &self.dist
    }
}
