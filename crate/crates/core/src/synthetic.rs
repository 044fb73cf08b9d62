//! Planted block-correlation datasets and brute-force oracles.
//!
//! Series `i` in block `b` is generated as
//!
//! ```text
//! x_i(t) = a g(t) + s f_b(t) + e eps_i(t)
//! a = sqrt(rho_inter),  s = sqrt(rho_intra - rho_inter),  e = sqrt(1 - rho_intra)
//! ```
//!
//! with `g`, `f_b`, `eps_i` independent standard normals, so every series
//! has unit variance, within-block correlation `rho_intra` and cross-block
//! correlation `rho_inter`. Per row the draws are taken in the order `g`,
//! then `f_0..f_B`, then `eps_0..eps_N`, from a ChaCha8 generator seeded
//! with `BlockSpec::seed`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corrnet::DistanceMatrix;
use crate::error::{Error, Result};
use crate::hierarchy::UltrametricMatrix;
use crate::ingest::{PriceTable, ReturnsMatrix};
use crate::mst::{SpanningTree, TreeEdge};

/// Largest node count the enumeration oracles accept.
pub const ORACLE_MAX_N: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    /// `(label prefix, size)` per block.
    pub blocks: Vec<(String, usize)>,
    pub intra_rho: f64,
    pub inter_rho: f64,
    pub rows: usize,
    pub seed: u64,
}

impl BlockSpec {
    pub fn n(&self) -> usize {
        self.blocks.iter().map(|b| b.1).sum()
    }

    /// Labels `prefix1, prefix2, ...` per block, in block order.
    pub fn symbols(&self) -> Vec<String> {
        self.blocks
            .iter()
            .flat_map(|(p, size)| (1..=*size).map(move |k| format!("{p}{k}")))
            .collect()
    }

    /// Block index of every series.
    pub fn membership(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(b, (_, size))| std::iter::repeat_n(b, *size))
            .collect()
    }

    /// Planted partition as sorted index groups.
    pub fn partition(&self) -> Vec<Vec<usize>> {
        let mut start = 0;
        self.blocks
            .iter()
            .map(|(_, size)| {
                let g = (start..start + size).collect();
                start += size;
                g
            })
            .collect()
    }

    /// Target correlation matrix, row-major.
    pub fn target_correlation(&self) -> Vec<f64> {
        let m = self.membership();
        let n = m.len();
        let mut c = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                c[i * n + j] = if i == j {
                    1.0
                } else if m[i] == m[j] {
                    self.intra_rho
                } else {
                    self.inter_rho
                };
            }
        }
        c
    }

    /// Factor weights `(global, block, idiosyncratic)`; real exactly when the
    /// target matrix is attainable by the factor construction.
    pub fn weights(&self) -> Result<(f64, f64, f64)> {
        let (intra, inter) = (self.intra_rho, self.inter_rho);
        if !(intra.is_finite() && inter.is_finite()) {
            return Err(Error::InfeasibleBlockModel("non-finite correlation".into()));
        }
        if !(0.0..1.0).contains(&inter) {
            return Err(Error::InfeasibleBlockModel(format!("inter rho {inter} not in [0, 1)")));
        }
        if !(0.0..1.0).contains(&intra) {
            return Err(Error::InfeasibleBlockModel(format!("intra rho {intra} not in [0, 1)")));
        }
        if intra < inter {
            return Err(Error::InfeasibleBlockModel(format!(
                "intra rho {intra} below inter rho {inter}"
            )));
        }
        Ok((inter.sqrt(), (intra - inter).sqrt(), (1.0 - intra).sqrt()))
    }

    fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() || self.blocks.iter().any(|b| b.1 == 0) {
            return Err(Error::InfeasibleBlockModel("empty block".into()));
        }
        if self.n() < 2 {
            return Err(Error::TooFewSymbols(self.n()));
        }
        if self.rows < 2 {
            return Err(Error::TooFewRows {
                needed: 2,
                found: self.rows,
            });
        }
        self.weights().map(|_| ())
    }
}

/// Draws a `rows x N` returns matrix from the block factor model.
pub fn generate_block_model(spec: &BlockSpec) -> Result<ReturnsMatrix> {
    spec.validate()?;
    let (wg, wb, we) = spec.weights()?;
    let membership = spec.membership();
    let n = membership.len();
    let n_blocks = spec.blocks.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut data = Vec::with_capacity(spec.rows * n);
    let mut block = vec![0.0; n_blocks];
    for _ in 0..spec.rows {
        let g: f64 = StandardNormal.sample(&mut rng);
        for f in block.iter_mut() {
            *f = StandardNormal.sample(&mut rng);
        }
        for &b in &membership {
            let eps: f64 = StandardNormal.sample(&mut rng);
            data.push(wg * g + wb * block[b] + we * eps);
        }
    }
    ReturnsMatrix::from_flat(spec.symbols(), data, 1)
}

/// Prices `exp(cumsum(returns))` starting from 1, one row more than `returns`.
/// Dates are consecutive months starting at `start` (`YYYY-MM`).
pub fn prices_from_returns(returns: &ReturnsMatrix, start: &str) -> Result<PriceTable> {
    let (mut year, mut month) = parse_month(start)?;
    let n = returns.n_cols();
    let mut dates = Vec::with_capacity(returns.n_rows() + 1);
    let mut values = Vec::with_capacity((returns.n_rows() + 1) * n);
    let mut level = vec![0.0f64; n];
    for t in 0..=returns.n_rows() {
        dates.push(format!("{year:04}-{month:02}"));
        if t > 0 {
            for (l, r) in level.iter_mut().zip(returns.row(t - 1)) {
                *l += r;
            }
        }
        values.extend(level.iter().map(|l| Some(l.exp())));
        month += 1;
        if month > 12 {
            month = 1;
            year += 1;
        }
    }
    if year > 9999 {
        return Err(Error::Config("date range runs past year 9999".into()));
    }
    PriceTable::new(dates, returns.symbols().to_vec(), values)
}

fn parse_month(s: &str) -> Result<(u32, u32)> {
    let bad = || Error::BadDate {
        value: s.to_string(),
        line: 0,
    };
    let (y, m) = s.split_once('-').ok_or_else(bad)?;
    if y.len() != 4 || m.len() != 2 {
        return Err(bad());
    }
    let y: u32 = y.parse().map_err(|_| bad())?;
    let m: u32 = m.parse().map_err(|_| bad())?;
    if !(1..=12).contains(&m) {
        return Err(bad());
    }
    Ok((y, m))
}

fn check_oracle_size(n: usize) -> Result<()> {
    if n > ORACLE_MAX_N {
        return Err(Error::OracleTooLarge {
            n,
            max: ORACLE_MAX_N,
        });
    }
    Ok(())
}

/// Decodes a Prüfer sequence over `0..n` into its `n - 1` tree edges.
pub fn prufer_decode(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for &x in seq {
        let leaf = (0..n).find(|&l| degree[l] == 1).expect("a leaf exists");
        edges.push((leaf.min(x), leaf.max(x)));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&l| degree[l] == 1).collect();
    if rest.len() == 2 {
        edges.push((rest[0], rest[1]));
    }
    edges
}

/// Calls `visit` with the edge list of every labeled tree on `n` nodes and
/// returns how many were visited (`n^(n-2)` for `n >= 2`).
pub fn for_each_labeled_tree(n: usize, mut visit: impl FnMut(&[(usize, usize)])) -> usize {
    match n {
        0 => return 0,
        1 => {
            visit(&[]);
            return 1;
        }
        _ => {}
    }
    let len = n - 2;
    let mut seq = vec![0usize; len];
    let mut count = 0;
    loop {
        visit(&prufer_decode(&seq, n));
        count += 1;
        // Odometer increment.
        let mut k = 0;
        loop {
            if k == len {
                return count;
            }
            seq[k] += 1;
            if seq[k] < n {
                break;
            }
            seq[k] = 0;
            k += 1;
        }
    }
}

/// Exact MST by enumerating all labeled spanning trees. `n <= 8`.
pub fn brute_force_mst(dist: &DistanceMatrix) -> Result<SpanningTree> {
    let n = dist.n();
    check_oracle_size(n)?;
    if n == 0 {
        return Err(Error::Empty("distance matrix has no nodes"));
    }
    let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
    for_each_labeled_tree(n, |edges| {
        let w: f64 = edges.iter().map(|&(u, v)| dist.get(u, v)).sum();
        if best.as_ref().is_none_or(|(bw, _)| w < *bw) {
            best = Some((w, edges.to_vec()));
        }
    });
    let (_, mut pairs) = best.expect("at least one tree");
    pairs.sort_unstable();
    let edges = pairs
        .into_iter()
        .map(|(u, v)| TreeEdge {
            u,
            v,
            distance: dist.get(u, v),
            correlation: dist.correlation(u, v),
            reliability: None,
        })
        .collect();
    SpanningTree::from_edges(dist.symbols().to_vec(), edges)
}

/// Minimax path distance over all simple paths in the complete graph. `n <= 8`.
pub fn brute_force_subdominant(dist: &DistanceMatrix) -> Result<UltrametricMatrix> {
    let n = dist.n();
    check_oracle_size(n)?;
    let mut values = vec![0.0; n * n];

    fn walk(
        dist: &DistanceMatrix,
        at: usize,
        target: usize,
        path_max: f64,
        visited: &mut [bool],
        best: &mut f64,
    ) {
        if at == target {
            *best = best.min(path_max);
            return;
        }
        for next in 0..dist.n() {
            if !visited[next] {
                visited[next] = true;
                walk(dist, next, target, path_max.max(dist.get(at, next)), visited, best);
                visited[next] = false;
            }
        }
    }

    for i in 0..n {
        for j in i + 1..n {
            let mut visited = vec![false; n];
            visited[i] = true;
            let mut best = f64::INFINITY;
            walk(dist, i, j, 0.0, &mut visited, &mut best);
            values[i * n + j] = best;
            values[j * n + i] = best;
        }
    }
    UltrametricMatrix::new(dist.symbols().to_vec(), values)
}
