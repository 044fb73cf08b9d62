//! Bootstrap reliability of MST links.
//!
//! Each replica resamples the time rows of the returns matrix with
//! replacement, keeping every row's cross-section intact, then rebuilds
//! correlation, distance and MST with the same tie-break as the reference
//! tree. A link's reliability is the fraction of usable replicas whose tree
//! contains it.
//!
//! Replica `r` draws from a ChaCha8 stream seeded with the master seed and
//! stream id `r`, so the tally is independent of how replicas are scheduled
//! across threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corrnet::{correlation_to_distance, pearson_matrix};
use crate::error::{Error, Result};
use crate::ingest::ReturnsMatrix;
use crate::mst::{kruskal_mst, SpanningTree};

pub const DEFAULT_REPLICAS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSupport {
    pub u: usize,
    pub v: usize,
    /// Replicas whose tree contains `(u, v)`.
    pub preserved: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapReport {
    pub replicas: usize,
    pub seed: u64,
    /// One entry per reference MST edge, sorted by `(u, v)`.
    pub links: Vec<LinkSupport>,
    /// Replicas skipped because a resampled column had zero variance.
    pub dropped_replicas: usize,
}

impl BootstrapReport {
    pub fn fraction(&self, a: usize, b: usize) -> Option<f64> {
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        self.links
            .iter()
            .find(|l| l.u == u && l.v == v)
            .map(|l| l.fraction)
    }

    pub fn used_replicas(&self) -> usize {
        self.replicas - self.dropped_replicas
    }
}

/// The RNG for replica `index` under `seed`.
pub fn replica_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Row indices for one with-replacement draw of `n` rows.
pub fn draw_indices<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Efron resample of the rows of `returns`.
pub fn resample_rows<R: Rng + ?Sized>(returns: &ReturnsMatrix, rng: &mut R) -> ReturnsMatrix {
    let idx = draw_indices(returns.n_rows(), rng);
    returns.take_rows(&idx)
}

/// MST edge set of one replica, or `None` if correlation was undefined.
fn replica_tree(returns: &ReturnsMatrix, seed: u64, index: usize) -> Result<Option<SpanningTree>> {
    let mut rng = replica_rng(seed, index);
    let sample = resample_rows(returns, &mut rng);
    match pearson_matrix(&sample) {
        Ok(corr) => kruskal_mst(&correlation_to_distance(&corr)).map(Some),
        Err(Error::ZeroVariance(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn tally(
    returns: &ReturnsMatrix,
    reference: &SpanningTree,
    replicas: usize,
    seed: u64,
) -> Result<(Vec<usize>, usize)> {
    let pairs: Vec<(usize, usize)> = reference.edges().iter().map(|e| (e.u, e.v)).collect();
    let zero = || (vec![0usize; pairs.len()], 0usize);
    (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<(Vec<usize>, usize)> {
            let mut acc = zero();
            match replica_tree(returns, seed, r)? {
                None => acc.1 = 1,
                Some(tree) => {
                    for (k, &(u, v)) in pairs.iter().enumerate() {
                        if tree.contains_edge(u, v) {
                            acc.0[k] = 1;
                        }
                    }
                }
            }
            Ok(acc)
        })
        .try_reduce(zero, |mut a, b| {
            for (x, y) in a.0.iter_mut().zip(&b.0) {
                *x += y;
            }
            a.1 += b.1;
            Ok(a)
        })
}

/// Reference MST of the full sample annotated with bootstrap link fractions.
///
/// Runs on the current rayon pool.
pub fn link_reliability(
    returns: &ReturnsMatrix,
    replicas: usize,
    seed: u64,
) -> Result<(SpanningTree, BootstrapReport)> {
    if replicas == 0 {
        return Err(Error::NoReplicas);
    }
    let mut reference = kruskal_mst(&correlation_to_distance(&pearson_matrix(returns)?))?;
    let (counts, dropped) = tally(returns, &reference, replicas, seed)?;
    let used = replicas - dropped;
    if used == 0 {
        return Err(Error::AllReplicasDropped(replicas));
    }

    for (edge, &count) in reference.edges_mut().iter_mut().zip(&counts) {
        edge.reliability = Some(count as f64 / used as f64);
    }
    let mut links: Vec<LinkSupport> = reference
        .edges()
        .iter()
        .zip(&counts)
        .map(|(e, &preserved)| LinkSupport {
            u: e.u,
            v: e.v,
            preserved,
            fraction: preserved as f64 / used as f64,
        })
        .collect();
    links.sort_by_key(|l| (l.u, l.v));

    Ok((
        reference,
        BootstrapReport {
            replicas,
            seed,
            links,
            dropped_replicas: dropped,
        },
    ))
}

/// [`link_reliability`] on a dedicated pool of `threads` workers.
pub fn link_reliability_with_threads(
    returns: &ReturnsMatrix,
    replicas: usize,
    seed: u64,
    threads: usize,
) -> Result<(SpanningTree, BootstrapReport)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| link_reliability(returns, replicas, seed))
}
