//! Agglomerative hierarchical trees: single linkage (whose cophenetic
//! distances are the subdominant ultrametric of the input) and average
//! linkage (UPGMA).
//!
//! Cluster ids follow the usual convention: leaves are `0..N`, and the
//! cluster formed at merge step `s` gets id `N + s`. Among cluster pairs at
//! equal distance the pair with the smallest `(min member, other min member)`
//! is merged first, and the cluster holding the smaller member becomes the
//! left child. Both rules together make a dendrogram a pure function of the
//! input matrix.

use serde::{Deserialize, Serialize};

use crate::corrnet::DistanceMatrix;
use crate::error::{Error, Result};
use crate::union_find::UnionFind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Average,
}

impl Linkage {
    pub fn as_str(self) -> &'static str {
        match self {
            Linkage::Single => "single",
            Linkage::Average => "average",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub id: usize,
    /// Number of leaves under the new cluster.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    symbols: Vec<String>,
    merges: Vec<Merge>,
    linkage: Linkage,
}

/// Symmetric matrix satisfying the strong triangle inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct UltrametricMatrix {
    symbols: Vec<String>,
    values: Vec<f64>,
}

impl UltrametricMatrix {
    pub fn new(symbols: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != symbols.len() * symbols.len() {
            return Err(Error::Shape(format!(
                "{} entries for {} symbols",
                values.len(),
                symbols.len()
            )));
        }
        Ok(UltrametricMatrix { symbols, values })
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn n(&self) -> usize {
        self.symbols.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// First triple `(i, j, k)` with `u(i,j) > max(u(i,k), u(k,j)) + tol`.
    pub fn strong_triangle_violation(&self, tol: f64) -> Option<(usize, usize, usize)> {
        let n = self.n();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.get(i, j) > self.get(i, k).max(self.get(k, j)) + tol {
                        return Some((i, j, k));
                    }
                }
            }
        }
        None
    }
}

impl Dendrogram {
    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn n(&self) -> usize {
        self.symbols.len()
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn linkage(&self) -> Linkage {
        self.linkage
    }

    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    /// Height at which cluster `id` was formed (zero for leaves).
    pub fn height_of(&self, id: usize) -> f64 {
        if id < self.n() {
            0.0
        } else {
            self.merges[id - self.n()].height
        }
    }

    /// Leaves under each cluster id, `0..2N-1`.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for m in &self.merges {
            let mut both = members[m.left].clone();
            both.extend_from_slice(&members[m.right]);
            members.push(both);
        }
        members
    }

    /// Replaces leaf indices with symbols.
    pub fn label_partition(&self, partition: &[Vec<usize>]) -> Vec<Vec<String>> {
        partition
            .iter()
            .map(|g| g.iter().map(|&i| self.symbols[i].clone()).collect())
            .collect()
    }
}

fn agglomerate(dist: &DistanceMatrix, linkage: Linkage) -> Result<Dendrogram> {
    let n = dist.n();
    if n < 2 {
        return Err(Error::ClusterCount { k: 2, n });
    }
    // Slot `s` holds the active cluster whose smallest leaf is `s`.
    let mut d = dist.values().to_vec();
    let mut active = vec![true; n];
    let mut id = (0..n).collect::<Vec<_>>();
    let mut size = vec![1usize; n];
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..n {
            if !active[a] {
                continue;
            }
            for b in a + 1..n {
                if !active[b] {
                    continue;
                }
                let dab = d[a * n + b];
                if best.is_none_or(|(h, _, _)| dab < h) {
                    best = Some((dab, a, b));
                }
            }
        }
        let (height, a, b) = best.expect("at least two active clusters");

        let (sa, sb) = (size[a], size[b]);
        for c in 0..n {
            if !active[c] || c == a || c == b {
                continue;
            }
            let (dac, dbc) = (d[a * n + c], d[b * n + c]);
            let merged = match linkage {
                Linkage::Single => dac.min(dbc),
                // Reducible: a weighted mean of values >= height stays >= height,
                // the max only absorbs rounding.
                Linkage::Average => ((sa as f64 * dac + sb as f64 * dbc) / (sa + sb) as f64).max(height),
            };
            d[a * n + c] = merged;
            d[c * n + a] = merged;
        }

        let new_id = n + step;
        merges.push(Merge {
            left: id[a],
            right: id[b],
            height,
            id: new_id,
            size: sa + sb,
        });
        active[b] = false;
        id[a] = new_id;
        size[a] = sa + sb;
    }

    Ok(Dendrogram {
        symbols: dist.symbols().to_vec(),
        merges,
        linkage,
    })
}

/// Single-linkage clustering: cluster distance is the minimum cross-pair distance.
pub fn single_linkage(dist: &DistanceMatrix) -> Result<Dendrogram> {
    agglomerate(dist, Linkage::Single)
}

/// Average-linkage (UPGMA) clustering: cluster distance is the mean of all
/// cross-pair distances.
pub fn average_linkage(dist: &DistanceMatrix) -> Result<Dendrogram> {
    agglomerate(dist, Linkage::Average)
}

pub fn linkage(dist: &DistanceMatrix, linkage: Linkage) -> Result<Dendrogram> {
    agglomerate(dist, linkage)
}

/// `u(i, j)` = height of the lowest merge that joins `i` and `j`.
pub fn cophenetic_matrix(dendro: &Dendrogram) -> UltrametricMatrix {
    let n = dendro.n();
    let mut values = vec![0.0; n * n];
    let members = dendro.members();
    for m in dendro.merges() {
        for &a in &members[m.left] {
            for &b in &members[m.right] {
                values[a * n + b] = m.height;
                values[b * n + a] = m.height;
            }
        }
    }
    UltrametricMatrix {
        symbols: dendro.symbols().to_vec(),
        values,
    }
}

/// The `k` clusters left after undoing the last `k - 1` merges. Clusters
/// are sorted and ordered by smallest leaf.
pub fn cut_clusters(dendro: &Dendrogram, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = dendro.n();
    if k == 0 || k > n {
        return Err(Error::ClusterCount { k, n });
    }
    let mut uf = UnionFind::new(n);
    // Any leaf under a cluster serves as its representative.
    let mut rep: Vec<usize> = (0..n).collect();
    for m in &dendro.merges()[..n - k] {
        uf.union(rep[m.left], rep[m.right]);
        rep.push(rep[m.left]);
    }
    Ok(uf.groups())
}
