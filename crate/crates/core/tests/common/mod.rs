//! Shared generators and independent oracles for integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taxonet::{DistanceMatrix, ReturnsMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("S{i}")).collect()
}

/// Entries uniform in [1, 2): distinct with probability one and always
/// metric, since any two sides sum to at least 2.
pub fn random_metric(n: usize, rng: &mut impl Rng) -> DistanceMatrix {
    DistanceMatrix::from_fn(labels(n), |_, _| rng.random_range(1.0..2.0)).unwrap()
}

pub fn random_returns(rows: usize, cols: usize, rng: &mut impl Rng) -> ReturnsMatrix {
    let data = (0..rows)
        .map(|_| (0..cols).map(|_| rng.random_range(-0.1..0.1)).collect())
        .collect();
    ReturnsMatrix::new(labels(cols), data, 1).unwrap()
}

/// Pearson coefficient of two columns written as raw moments:
/// (<xy> - <x><y>) / sqrt((<x^2> - <x>^2)(<y^2> - <y>^2)).
pub fn direct_pearson(x: &[f64], y: &[f64]) -> f64 {
    let t = x.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / t;
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let xx: Vec<f64> = x.iter().map(|a| a * a).collect();
    let yy: Vec<f64> = y.iter().map(|a| a * a).collect();
    let (mx, my) = (mean(x), mean(y));
    (mean(&xy) - mx * my) / ((mean(&xx) - mx * mx) * (mean(&yy) - my * my)).sqrt()
}

/// Prim's algorithm, O(n^2); returns sorted canonical pairs and total weight.
pub fn prim(d: &DistanceMatrix) -> (Vec<(usize, usize)>, f64) {
    let n = d.n();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    best[0] = 0.0;
    let mut edges = Vec::new();
    let mut total = 0.0;
    for _ in 0..n {
        let x = (0..n)
            .filter(|&i| !in_tree[i])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]))
            .unwrap();
        in_tree[x] = true;
        if x != 0 {
            edges.push((from[x].min(x), from[x].max(x)));
            total += best[x];
        }
        for y in 0..n {
            if !in_tree[y] && d.get(x, y) < best[y] {
                best[y] = d.get(x, y);
                from[y] = x;
            }
        }
    }
    edges.sort_unstable();
    (edges, total)
}

/// A merge step as `(sorted leaves of left, sorted leaves of right, height)`.
pub type NaiveMerge = (Vec<usize>, Vec<usize>, f64);

/// UPGMA that recomputes every cluster distance from scratch as the mean of
/// all cross-pair leaf distances. Ties go to the pair with the smallest
/// `(min leaf, other min leaf)`.
pub fn naive_upgma(d: &DistanceMatrix) -> Vec<NaiveMerge> {
    let mut clusters: Vec<Vec<usize>> = (0..d.n()).map(|i| vec![i]).collect();
    let mut out = Vec::new();
    while clusters.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut sum = 0.0;
                for &x in &clusters[a] {
                    for &y in &clusters[b] {
                        sum += d.get(x, y);
                    }
                }
                let mean = sum / (clusters[a].len() * clusters[b].len()) as f64;
                let key = |p: usize, q: usize| {
                    let (ma, mb) = (clusters[p][0], clusters[q][0]);
                    (ma.min(mb), ma.max(mb))
                };
                let better = match best {
                    None => true,
                    Some((h, p, q)) => mean < h || (mean == h && key(a, b) < key(p, q)),
                };
                if better {
                    best = Some((mean, a, b));
                }
            }
        }
        let (h, a, b) = best.unwrap();
        let (left, right) = if clusters[a][0] < clusters[b][0] { (a, b) } else { (b, a) };
        let (l, r) = (clusters[left].clone(), clusters[right].clone());
        out.push((l.clone(), r.clone(), h));
        let mut merged = [l, r].concat();
        merged.sort_unstable();
        let (hi, lo) = (a.max(b), a.min(b));
        clusters.remove(hi);
        clusters[lo] = merged;
        clusters.sort_by_key(|c| c[0]);
    }
    out
}

/// Max edge on the tree path between `i` and `j`, by enumerating the path
/// with a recursive DFS over the edge list.
pub fn dfs_path_max(n: usize, edges: &[(usize, usize, f64)], i: usize, j: usize) -> f64 {
    fn go(
        at: usize,
        target: usize,
        prev: Option<usize>,
        edges: &[(usize, usize, f64)],
        acc: f64,
    ) -> Option<f64> {
        if at == target {
            return Some(acc);
        }
        for &(u, v, w) in edges {
            let next = if u == at {
                v
            } else if v == at {
                u
            } else {
                continue;
            };
            if Some(next) == prev {
                continue;
            }
            if let Some(m) = go(next, target, Some(at), edges, acc.max(w)) {
                return Some(m);
            }
        }
        None
    }
    assert!(i < n && j < n);
    go(i, j, None, edges, 0.0).expect("tree is connected")
}

/// Random labeled tree on `n` nodes with weights in [0, 1).
pub fn random_tree(n: usize, rng: &mut impl Rng) -> Vec<(usize, usize, f64)> {
    (1..n)
        .map(|v| {
            let u = rng.random_range(0..v);
            (u, v, rng.random_range(0.0..1.0))
        })
        .collect()
}

/// Leaves of each merge of a dendrogram, in the same layout as `naive_upgma`.
pub fn merge_leaves(d: &taxonet::Dendrogram) -> Vec<NaiveMerge> {
    let members = d.members();
    d.merges()
        .iter()
        .map(|m| {
            let mut l = members[m.left].clone();
            let mut r = members[m.right].clone();
            l.sort_unstable();
            r.sort_unstable();
            (l, r, m.height)
        })
        .collect()
}

/// Partition with groups sorted and ordered by first element.
pub fn canonical(mut p: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for g in &mut p {
        g.sort_unstable();
    }
    p.sort();
    p
}
