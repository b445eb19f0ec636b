//! Partition quality: normalized mutual information against a reference
//! labelling and the relative density of between- to within-community edges.

use crate::error::{Error, Result};
use crate::graph::SparseGraph;

/// Joint label frequencies `M[k][l] = #{i: est_i = k, truth_i = l} / N`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfusionMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ConfusionMatrix {
    /// Rows follow `est`, columns follow `truth`.
    pub fn new(truth: &[u32], est: &[u32]) -> Result<Self> {
        if truth.len() != est.len() {
            return Err(Error::LengthMismatch {
                expected: truth.len(),
                actual: est.len(),
            });
        }
        if truth.is_empty() {
            return Err(Error::Undefined("confusion matrix of zero nodes"));
        }
        let rows = est.iter().max().map_or(0, |&m| m as usize + 1);
        let cols = truth.iter().max().map_or(0, |&m| m as usize + 1);
        let mut data = vec![0.0; rows * cols];
        let unit = 1.0 / truth.len() as f64;
        for (&z, &e) in truth.iter().zip(est) {
            data[e as usize * cols + z as usize] += unit;
        }
        Ok(Self { rows, cols, data })
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.data[k * self.cols + l]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row_marginals(&self) -> Vec<f64> {
        self.data.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_marginals(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.cols];
        for r in self.data.chunks(self.cols) {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        m
    }
}

/// Mutual information divided by joint entropy. Two single-block
/// partitions score 1.
pub fn nmi(truth: &[u32], est: &[u32]) -> Result<f64> {
    let m = ConfusionMatrix::new(truth, est)?;
    let rows = m.row_marginals();
    let cols = m.col_marginals();
    let (mut mi, mut joint) = (0.0, 0.0);
    for k in 0..m.rows {
        for l in 0..m.cols {
            let p = m.get(k, l);
            if p > 0.0 {
                mi += p * (p / (rows[k] * cols[l])).ln();
                joint -= p * p.ln();
            }
        }
    }
    if joint <= 0.0 {
        return Ok(1.0);
    }
    let v = mi / joint;
    Ok(if v < 0.0 && v >= -1e-12 { 0.0 } else { v.min(1.0) })
}

/// Pair and edge counts behind [`red`], over unordered pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DensityCounts {
    pub within_edges: u64,
    pub within_pairs: u64,
    pub between_edges: u64,
    pub between_pairs: u64,
}

pub fn density_counts(graph: &SparseGraph, est: &[u32]) -> Result<DensityCounts> {
    let n = graph.num_nodes();
    if est.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: est.len(),
        });
    }
    let mut sizes = vec![0u64; est.iter().max().map_or(0, |&m| m as usize + 1)];
    for &l in est {
        sizes[l as usize] += 1;
    }
    let total_pairs = n as u64 * n.saturating_sub(1) as u64 / 2;
    let within_pairs: u64 = sizes.iter().map(|&s| s * s.saturating_sub(1) / 2).sum();
    let within_edges = graph
        .edges()
        .filter(|&(u, v)| est[u as usize] == est[v as usize])
        .count() as u64;
    Ok(DensityCounts {
        within_edges,
        within_pairs,
        between_edges: graph.num_edges() as u64 - within_edges,
        between_pairs: total_pairs - within_pairs,
    })
}

/// Between-community edge density over within-community edge density.
/// Smaller is better; `+inf` when no edge falls inside a community.
pub fn red(graph: &SparseGraph, est: &[u32]) -> Result<f64> {
    let c = density_counts(graph, est)?;
    if c.between_pairs == 0 {
        return Err(Error::Undefined("relative density needs at least two communities"));
    }
    if c.within_pairs == 0 {
        return Err(Error::Undefined("relative density needs a pair inside a community"));
    }
    let between = c.between_edges as f64 / c.between_pairs as f64;
    let within = c.within_edges as f64 / c.within_pairs as f64;
    if within == 0.0 {
        return if between > 0.0 {
            Ok(f64::INFINITY)
        } else {
            Err(Error::Undefined("relative density of a graph with no edges"))
        };
    }
    Ok(between / within)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_permuted() {
        let z = [0, 0, 1, 1, 2, 2];
        assert!((nmi(&z, &z).unwrap() - 1.0).abs() < 1e-15);
        assert!((nmi(&z, &[2, 2, 0, 0, 1, 1]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn crossed_halves_are_independent() {
        // truth (1,1,2,2), estimate (1,2,1,2): every cell 1/4, marginals 1/2
        let v = nmi(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn partial_agreement() {
        // cells: (0,0)=2/4, (1,0)=1/4, (1,1)=1/4
        let p = [0.5f64, 0.25, 0.25];
        let mi = 0.5 * (0.5f64 / (0.5 * 0.75)).ln()
            + 0.25 * (0.25f64 / (0.5 * 0.75)).ln()
            + 0.25 * (0.25f64 / (0.5 * 0.25)).ln();
        let h: f64 = -p.iter().map(|x| x * x.ln()).sum::<f64>();
        let v = nmi(&[0, 0, 0, 1], &[0, 0, 1, 1]).unwrap();
        assert!((v - mi / h).abs() < 1e-14);
    }

    #[test]
    fn trivial_partitions() {
        assert_eq!(nmi(&[0, 0, 0], &[0, 0, 0]).unwrap(), 1.0);
        assert_eq!(nmi(&[0, 0, 0], &[0, 1, 2]).unwrap(), 0.0);
        assert!(nmi(&[0], &[0, 1]).is_err());
    }

    fn two_triangles() -> SparseGraph {
        SparseGraph::from_edges(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]).0
    }

    #[test]
    fn red_cases() {
        let g = two_triangles();
        assert_eq!(red(&g, &[0, 0, 0, 1, 1, 1]).unwrap(), 0.0);
        // mixed labels on an assortative graph
        let mixed = red(&g, &[0, 0, 1, 1, 1, 0]).unwrap();
        assert!(mixed > 1.0, "{mixed}");
        assert!(red(&g, &[0; 6]).is_err());
        assert!(red(&g, &[0, 1, 2, 3, 4, 5]).is_err());
        assert!(red(&SparseGraph::empty(4), &[0, 0, 1, 1]).is_err());
        let star = SparseGraph::from_edges(3, [(0, 1), (0, 2)]).0;
        assert_eq!(red(&star, &[0, 1, 1]).unwrap(), f64::INFINITY);
    }
}
