//! Minimum spanning trees over a distance matrix (Kruskal) and tree queries.

use serde::{Deserialize, Serialize};

use crate::corrnet::DistanceMatrix;
use crate::error::{Error, Result};
use crate::union_find::UnionFind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEdge {
    /// Always `u < v`.
    pub u: usize,
    pub v: usize,
    pub distance: f64,
    pub correlation: f64,
    /// Bootstrap link fraction, once computed.
    pub reliability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    symbols: Vec<String>,
    edges: Vec<TreeEdge>,
}

impl SpanningTree {
    /// Builds a tree from explicit edges, checking that they form a spanning
    /// tree over `symbols`. Edge endpoints are canonicalised to `u < v`.
    pub fn from_edges(symbols: Vec<String>, mut edges: Vec<TreeEdge>) -> Result<Self> {
        let n = symbols.len();
        if n == 0 {
            return Err(Error::Empty("spanning tree needs at least one node"));
        }
        if edges.len() != n - 1 {
            return Err(Error::Shape(format!("{} edges for {n} nodes", edges.len())));
        }
        let mut uf = UnionFind::new(n);
        for e in &mut edges {
            if e.u > e.v {
                std::mem::swap(&mut e.u, &mut e.v);
            }
            if e.v >= n {
                return Err(Error::NodeIndex { index: e.v, n });
            }
            if !uf.union(e.u, e.v) {
                return Err(Error::Shape(format!("edge ({},{}) closes a cycle", e.u, e.v)));
            }
        }
        Ok(SpanningTree { symbols, edges })
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn n(&self) -> usize {
        self.symbols.len()
    }

    /// Edges in insertion order (ascending `(distance, u, v)` for Kruskal).
    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    pub fn edges_mut(&mut self) -> &mut [TreeEdge] {
        &mut self.edges
    }

    pub fn total_distance(&self) -> f64 {
        self.edges.iter().map(|e| e.distance).sum()
    }

    /// Canonical `(u, v)` pairs, sorted.
    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        let mut p: Vec<_> = self.edges.iter().map(|e| (e.u, e.v)).collect();
        p.sort_unstable();
        p
    }

    pub fn contains_edge(&self, a: usize, b: usize) -> bool {
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        self.edges.iter().any(|e| e.u == u && e.v == v)
    }

    /// Adjacency lists as `(neighbour, distance)`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n()];
        for e in &self.edges {
            adj[e.u].push((e.v, e.distance));
            adj[e.v].push((e.u, e.distance));
        }
        adj
    }

    /// Max edge distance on the path from `from` to every node.
    fn path_max_from(&self, adj: &[Vec<(usize, f64)>], from: usize) -> Vec<f64> {
        let mut best = vec![f64::NAN; self.n()];
        best[from] = 0.0;
        let mut stack = vec![from];
        while let Some(x) = stack.pop() {
            for &(y, w) in &adj[x] {
                if best[y].is_nan() {
                    best[y] = best[x].max(w);
                    stack.push(y);
                }
            }
        }
        best
    }

    /// The largest edge distance along the unique path between `i` and `j`
    /// (zero when `i == j`).
    pub fn path_max(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.n();
        for idx in [i, j] {
            if idx >= n {
                return Err(Error::NodeIndex { index: idx, n });
            }
        }
        Ok(self.path_max_from(&self.adjacency(), i)[j])
    }

    /// `path_max` for all pairs, row-major `N x N`.
    pub fn path_max_matrix(&self) -> Vec<f64> {
        let adj = self.adjacency();
        (0..self.n())
            .flat_map(|i| self.path_max_from(&adj, i))
            .collect()
    }

    /// Node degrees, indexed by node.
    pub fn degree_profile(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n()];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    /// Connected components left after deleting the `k` longest edges
    /// (ties broken towards the later edge in `(distance, u, v)` order).
    /// Components are sorted, ordered by smallest member.
    pub fn split_longest(&self, k: usize) -> Result<Vec<Vec<usize>>> {
        if k >= self.n() {
            return Err(Error::ClusterCount { k: k + 1, n: self.n() });
        }
        let mut order: Vec<&TreeEdge> = self.edges.iter().collect();
        order.sort_by(|a, b| {
            a.distance
                .total_cmp(&b.distance)
                .then(a.u.cmp(&b.u))
                .then(a.v.cmp(&b.v))
        });
        let mut uf = UnionFind::new(self.n());
        for e in &order[..order.len() - k] {
            uf.union(e.u, e.v);
        }
        Ok(uf.groups())
    }
}

/// Kruskal's algorithm over all `N (N - 1) / 2` candidate edges.
///
/// Candidates are sorted by `(distance, u, v)`, which makes the result unique
/// even when distances tie.
pub fn kruskal_mst(dist: &DistanceMatrix) -> Result<SpanningTree> {
    let n = dist.n();
    if n == 0 {
        return Err(Error::Empty("distance matrix has no nodes"));
    }
    let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in u + 1..n {
            candidates.push((dist.get(u, v), u, v));
        }
    }
    candidates.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut uf = UnionFind::new(n);
    let mut edges = Vec::with_capacity(n - 1);
    for (d, u, v) in candidates {
        if uf.union(u, v) {
            edges.push(TreeEdge {
                u,
                v,
                distance: d,
                correlation: dist.correlation(u, v),
                reliability: None,
            });
            if edges.len() == n - 1 {
                break;
            }
        }
    }
    Ok(SpanningTree {
        symbols: dist.symbols().to_vec(),
        edges,
    })
}

/// Free-function form of [`SpanningTree::path_max`].
pub fn tree_path_max(tree: &SpanningTree, i: usize, j: usize) -> Result<f64> {
    tree.path_max(i, j)
}

pub fn degree_profile(tree: &SpanningTree) -> Vec<usize> {
    tree.degree_profile()
}
