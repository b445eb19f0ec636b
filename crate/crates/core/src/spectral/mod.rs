//! Initial labels from the first shard: regularized spectral clustering of
//! the shard's column embedding (SCP), or its row-normalized spherical
//! variant (SSC).
//!
//! With `M = A_1 + c J` the embedding is `M^T U`, where `U` holds the top
//! eigenvectors of `M M^T - D` and `D` is the diagonal of `A_1 A_1^T` (the
//! row degrees). Without the deletion the degree diagonal swamps the block
//! signal once rows are sparse.

mod kmeans;
mod svd;

use log::{debug, warn};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use kmeans::{kmeans, KMeansOptions, KMeansResult};
use svd::top_eigenvectors;

use crate::labels::LabelVector;
use crate::partition::WorkerShard;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions {
    /// Extra random directions beyond `K`.
    pub oversample: usize,
    /// Power iterations always performed.
    pub power_iters: usize,
    /// Further power iterations run until the top-K eigenvalues move by less
    /// than this, relative.
    pub tol: f64,
    pub max_power_iters: usize,
    /// Add `mean column degree / N` to every entry of the shard.
    pub regularize: bool,
    /// Ritz values past the `K`-th used to gauge the noise bulk. The `K`-th
    /// direction counts as signal only if its gap to the next eigenvalue
    /// exceeds the spread of these. Zero keeps only the numerical check.
    pub noise_probe: usize,
    pub kmeans: KMeansOptions,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            oversample: 10,
            power_iters: 2,
            tol: 1e-6,
            max_power_iters: 20,
            regularize: true,
            noise_probe: 3,
            kmeans: KMeansOptions::default(),
        }
    }
}

/// `N x K` embedding of the shard's columns.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub values: DMatrix<f64>,
    /// Leading eigenvalues of the diagonal-deleted row Gram matrix; more
    /// than `dims()` of them when the subspace allows.
    pub eigenvalues: Vec<f64>,
}

impl Embedding {
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn dims(&self) -> usize {
        self.values.ncols()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralInit {
    pub labels: LabelVector,
    /// Fewer than `K` positive eigen-directions; labels are uniform random.
    pub rank_collapsed: bool,
}

/// The shard as an `n x N` linear operator, optionally plus `c * J`.
pub(crate) struct ShardOperator<'a> {
    shard: &'a WorkerShard,
    shift: f64,
}

impl<'a> ShardOperator<'a> {
    pub(crate) fn new(shard: &'a WorkerShard, regularize: bool) -> Self {
        let n_cols = shard.num_cols() as f64;
        let shift = if regularize && n_cols > 0.0 {
            // mean column degree over N, divided by N
            shard.nnz() as f64 / n_cols / n_cols
        } else {
            0.0
        };
        Self { shard, shift }
    }

    pub(crate) fn rows(&self) -> usize {
        self.shard.num_rows()
    }

    pub(crate) fn cols(&self) -> usize {
        self.shard.num_cols()
    }

    /// `M x` for every column `x` of `x` (`N x l`).
    pub(crate) fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let l = x.ncols();
        let mut y = DMatrix::zeros(self.rows(), l);
        for c in 0..l {
            let xc = x.column(c);
            let sum: f64 = xc.iter().sum();
            for i in 0..self.rows() {
                let mut acc = self.shift * sum;
                for &j in self.shard.row(i) {
                    acc += xc[j as usize];
                }
                y[(i, c)] = acc;
            }
        }
        y
    }

    /// `(M M^T - D) y`, shifted by the largest row degree to keep it
    /// positive semi-definite.
    pub(crate) fn gram_deleted(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let shift = self.max_degree() as f64;
        let mut out = self.apply(&self.apply_transpose(y));
        for i in 0..self.rows() {
            let diag = shift - self.shard.row(i).len() as f64;
            for c in 0..y.ncols() {
                out[(i, c)] += diag * y[(i, c)];
            }
        }
        out
    }

    pub(crate) fn max_degree(&self) -> usize {
        (0..self.rows()).map(|i| self.shard.row(i).len()).max().unwrap_or(0)
    }

    /// `M^T y` for every column of `y` (`n x l`).
    pub(crate) fn apply_transpose(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let l = y.ncols();
        let mut x = DMatrix::zeros(self.cols(), l);
        for c in 0..l {
            let yc = y.column(c);
            let sum: f64 = yc.iter().sum();
            let mut xc = x.column_mut(c);
            if self.shift != 0.0 {
                xc.fill(self.shift * sum);
            }
            for i in 0..self.rows() {
                for &j in self.shard.row(i) {
                    xc[j as usize] += yc[i];
                }
            }
        }
        x
    }
}

/// Column embedding `M^T U` of the (regularized) shard.
pub fn spectral_embedding(shard: &WorkerShard, k: usize, opts: &SpectralOptions, seed: u64) -> Embedding {
    let op = ShardOperator::new(shard, opts.regularize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let watch = k + 1 + opts.noise_probe;
    let top = top_eigenvectors(|y| op.gram_deleted(y), op.rows(), k, watch, opts, &mut rng);
    let shift = op.max_degree() as f64;
    Embedding {
        values: op.apply_transpose(&top.vectors),
        eigenvalues: top.values.iter().map(|v| v - shift).collect(),
    }
}

fn random_labels(n: usize, k: usize, rng: &mut impl Rng) -> LabelVector {
    (0..n).map(|_| rng.random_range(0..k as u32)).collect()
}

/// Number of leading directions, at most `k`, that are non-zero and stand
/// out from the bulk: direction `i` counts when its distance to the
/// `k+1`-th eigenvalue exceeds the spread of the next `probe` values.
fn signal_dims(eigenvalues: &[f64], k: usize, probe: usize) -> usize {
    if eigenvalues.len() < k || !(eigenvalues[0] > 0.0) {
        return 0;
    }
    let nonzero = eigenvalues[..k].iter().take_while(|&&v| v > 1e-10 * eigenvalues[0]).count();
    if probe == 0 || eigenvalues.len() <= k + probe {
        return nonzero;
    }
    let edge = eigenvalues[k];
    let spread = edge - eigenvalues[k + probe];
    eigenvalues[..nonzero].iter().take_while(|&&v| v - edge > spread).count()
}

/// Regularized spectral clustering of all `N` nodes from one shard.
pub fn init_labels_scp(shard: &WorkerShard, k: usize, seed: u64) -> SpectralInit {
    init_labels_scp_with(shard, k, seed, &SpectralOptions::default())
}

pub fn init_labels_scp_with(shard: &WorkerShard, k: usize, seed: u64, opts: &SpectralOptions) -> SpectralInit {
    init(shard, k, seed, opts, false)
}

/// Spherical spectral clustering: embedding rows scaled to unit length before
/// k-means. Nodes with no entry in the shard get the largest cluster's label.
pub fn init_labels_ssc(shard: &WorkerShard, k: usize, seed: u64) -> SpectralInit {
    init_labels_ssc_with(shard, k, seed, &SpectralOptions::default())
}

pub fn init_labels_ssc_with(shard: &WorkerShard, k: usize, seed: u64, opts: &SpectralOptions) -> SpectralInit {
    init(shard, k, seed, opts, true)
}

fn init(shard: &WorkerShard, k: usize, seed: u64, opts: &SpectralOptions, spherical: bool) -> SpectralInit {
    let n_cols = shard.num_cols();
    if k <= 1 {
        return SpectralInit {
            labels: LabelVector::constant(n_cols),
            rank_collapsed: false,
        };
    }
    let emb = spectral_embedding(shard, k, opts, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let d = signal_dims(&emb.eigenvalues, k, opts.noise_probe);
    if d == 0 {
        warn!("spectral embedding has no direction above the noise; using random labels");
        return SpectralInit {
            labels: random_labels(n_cols, k, &mut rng),
            rank_collapsed: true,
        };
    }
    if d < k {
        debug!("clustering on {d} of {k} spectral directions");
    }

    let mut keep = Vec::with_capacity(n_cols);
    let mut points = Vec::with_capacity(n_cols * d);
    if spherical {
        let mut touched = vec![false; n_cols];
        for &j in shard.col_indices() {
            touched[j as usize] = true;
        }
        for j in 0..n_cols {
            let row = emb.values.view((j, 0), (1, d));
            let norm = row.norm();
            if touched[j] && norm > 0.0 {
                keep.push(j);
                points.extend(row.iter().map(|x| x / norm));
            }
        }
    } else {
        for j in 0..n_cols {
            keep.push(j);
            points.extend(emb.values.view((j, 0), (1, d)).iter());
        }
    }
    if keep.len() < k {
        warn!("only {} embeddable nodes for {k} clusters; using random labels", keep.len());
        return SpectralInit {
            labels: random_labels(n_cols, k, &mut rng),
            rank_collapsed: true,
        };
    }

    let result = kmeans(&points, d, k, &opts.kmeans, &mut rng);
    let mut sizes = vec![0usize; k];
    for &a in &result.assignment {
        sizes[a as usize] += 1;
    }
    // ties go to the smaller label
    let largest = (0..k).rev().max_by_key(|&c| sizes[c]).unwrap_or(0) as u32;
    let mut labels = vec![largest; n_cols];
    for (&j, &a) in keep.iter().zip(&result.assignment) {
        labels[j] = a;
    }
    SpectralInit {
        labels: LabelVector::new(labels),
        rank_collapsed: false,
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::graph::SparseGraph;
    use crate::partition::{shards_for, IndexMap};

    fn two_cliques(size: u32) -> SparseGraph {
        let mut edges = Vec::new();
        for base in [0, size] {
            for i in 0..size {
                for j in i + 1..size {
                    edges.push((base + i, base + j));
                }
            }
        }
        SparseGraph::from_edges(2 * size as usize, edges).0
    }

    /// Interleaved blocks so the first shard holds rows from both cliques.
    fn interleaved_shard(g: &SparseGraph, workers: usize) -> WorkerShard {
        let n = g.num_nodes();
        let members: Vec<Vec<u32>> = (0..workers)
            .map(|r| (0..n as u32).filter(|i| *i as usize % workers == r).collect())
            .collect();
        let map = Arc::new(IndexMap::from_members(members).unwrap());
        shards_for(g, map).unwrap().remove(0)
    }

    fn same_partition(a: &[u32], b: &[u32]) -> bool {
        let mut fwd = std::collections::HashMap::new();
        let mut back = std::collections::HashMap::new();
        a.iter().zip(b).all(|(x, y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
    }

    #[test]
    fn cliques_are_recovered() {
        let g = two_cliques(10);
        let shard = interleaved_shard(&g, 2);
        let truth: Vec<u32> = (0..20).map(|i| (i >= 10) as u32).collect();
        for seed in 0..5 {
            let scp = init_labels_scp(&shard, 2, seed);
            assert!(!scp.rank_collapsed);
            assert!(same_partition(&scp.labels, &truth), "{:?}", scp.labels);
            let ssc = init_labels_ssc(&shard, 2, seed);
            assert!(same_partition(&ssc.labels, &truth), "{:?}", ssc.labels);
        }
    }

    #[test]
    fn single_cluster_skips_svd() {
        let g = two_cliques(3);
        let shard = interleaved_shard(&g, 1);
        let init = init_labels_scp(&shard, 1, 0);
        assert_eq!(init.labels, LabelVector::constant(6));
    }

    #[test]
    fn deterministic_per_seed() {
        let g = two_cliques(8);
        let shard = interleaved_shard(&g, 2);
        assert_eq!(init_labels_scp(&shard, 3, 9), init_labels_scp(&shard, 3, 9));
    }

    #[test]
    fn empty_shard_collapses() {
        let g = SparseGraph::empty(6);
        let shard = interleaved_shard(&g, 2);
        let init = init_labels_scp(&shard, 2, 0);
        assert!(init.rank_collapsed);
        assert_eq!(init.labels.len(), 6);
        init.labels.check_range(2).unwrap();
    }

    #[test]
    fn directions_inside_the_bulk_are_dropped() {
        // third value sits on the bulk edge
        let eig = [80.0, 26.0, 20.3, 20.1, 19.9, 19.8, 19.6];
        assert_eq!(signal_dims(&eig, 3, 3), 2);
        let eig = [80.0, 26.0, 24.0, 20.1, 19.9, 19.8, 19.6];
        assert_eq!(signal_dims(&eig, 3, 3), 3);
        assert_eq!(signal_dims(&eig, 3, 0), 3);
        assert_eq!(signal_dims(&[0.0, 0.0, 0.0], 2, 0), 0);
        assert_eq!(signal_dims(&[5.0, 0.0, 0.0], 2, 0), 1);
        // too few Ritz values to judge the bulk
        assert_eq!(signal_dims(&[5.0, 4.0, 1.0], 2, 3), 2);
    }

    #[test]
    fn untouched_column_gets_largest_cluster() {
        // two cliques of sizes 6 and 4 plus node 10 with no edges
        let mut edges = Vec::new();
        for (lo, hi) in [(0u32, 6u32), (6, 10)] {
            for i in lo..hi {
                for j in i + 1..hi {
                    edges.push((i, j));
                }
            }
        }
        let g = SparseGraph::from_edges(11, edges).0;
        let map = Arc::new(IndexMap::from_members(vec![(0..11).collect()]).unwrap());
        let shard = shards_for(&g, map).unwrap().remove(0);
        let init = init_labels_ssc(&shard, 2, 3);
        let big = init.labels[0];
        assert!(init.labels[..6].iter().all(|&l| l == big));
        assert!(init.labels[6..10].iter().all(|&l| l != big));
        assert_eq!(init.labels[10], big);
    }
}
