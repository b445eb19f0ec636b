//! Immutable symmetric binary adjacency in compressed sparse row form.

use crate::error::{Error, Result};

/// Undirected simple graph on `0..num_nodes`.
///
/// Every edge is stored in both endpoint rows, neighbor lists are strictly
/// increasing, and no node lists itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseGraph {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<u32>,
    num_edges: usize,
}

/// What [`SparseGraph::from_edges`] threw away.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub self_loops: usize,
    pub duplicates: usize,
}

impl SparseGraph {
    /// Builds a graph from undirected pairs. Self-loops are dropped, repeated
    /// pairs (in either orientation) collapse to one edge.
    ///
    /// Panics if an endpoint is `>= num_nodes`.
    pub fn from_edges<I>(num_nodes: usize, edges: I) -> (Self, BuildStats)
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let mut stats = BuildStats::default();
        let mut arcs: Vec<(u32, u32)> = Vec::new();
        let mut offered = 0usize;
        for (u, v) in edges {
            assert!(
                (u as usize) < num_nodes && (v as usize) < num_nodes,
                "edge ({u}, {v}) out of range for {num_nodes} nodes"
            );
            if u == v {
                stats.self_loops += 1;
                continue;
            }
            offered += 1;
            arcs.push((u, v));
            arcs.push((v, u));
        }
        arcs.sort_unstable();
        arcs.dedup();
        let num_edges = arcs.len() / 2;
        stats.duplicates = offered - num_edges;

        let mut row_offsets = vec![0usize; num_nodes + 1];
        for &(u, _) in &arcs {
            row_offsets[u as usize + 1] += 1;
        }
        for i in 0..num_nodes {
            row_offsets[i + 1] += row_offsets[i];
        }
        let col_indices = arcs.into_iter().map(|(_, v)| v).collect();
        (
            Self {
                num_nodes,
                row_offsets,
                col_indices,
                num_edges,
            },
            stats,
        )
    }

    pub fn empty(num_nodes: usize) -> Self {
        Self::from_edges(num_nodes, std::iter::empty()).0
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[u32] {
        &self.col_indices
    }

    #[inline]
    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.col_indices[self.row_offsets[node]..self.row_offsets[node + 1]]
    }

    #[inline]
    pub fn degree(&self, node: usize) -> usize {
        self.row_offsets[node + 1] - self.row_offsets[node]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Undirected edges as `(u, v)` with `u < v`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.num_nodes).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| (v as usize) > u)
                .map(move |&v| (u as u32, v))
        })
    }

    /// Checks symmetry, sortedness, range and the absence of self-loops.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if self.row_offsets.len() != self.num_nodes + 1 {
            return Err("row_offsets has wrong length".into());
        }
        if *self.row_offsets.last().unwrap() != self.col_indices.len() {
            return Err("row_offsets does not cover col_indices".into());
        }
        if self.col_indices.len() != 2 * self.num_edges {
            return Err("edge count disagrees with stored arcs".into());
        }
        for u in 0..self.num_nodes {
            let row = self.neighbors(u);
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("row {u} not strictly increasing"));
            }
            for &v in row {
                let v = v as usize;
                if v >= self.num_nodes {
                    return Err(format!("row {u} has out-of-range column {v}"));
                }
                if v == u {
                    return Err(format!("self-loop at {u}"));
                }
                if !self.has_edge(v, u) {
                    return Err(format!("edge {u}-{v} missing its reverse"));
                }
            }
        }
        Ok(())
    }
}

/// Degree statistics of a whole graph.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeSummary {
    pub per_node_degree: Vec<usize>,
    /// `2|E| / (N (N - 1))`, the fraction of unordered pairs that are edges.
    pub density: f64,
    pub average_degree: f64,
}

pub fn degree_summary(graph: &SparseGraph) -> Result<DegreeSummary> {
    let n = graph.num_nodes();
    if n < 2 {
        return Err(Error::TooFewNodes(n));
    }
    let per_node_degree: Vec<usize> = (0..n).map(|i| graph.degree(i)).collect();
    let pairs = n as f64 * (n as f64 - 1.0);
    Ok(DegreeSummary {
        per_node_degree,
        density: 2.0 * graph.num_edges() as f64 / pairs,
        average_degree: 2.0 * graph.num_edges() as f64 / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph() {
        let (g, stats) = SparseGraph::from_edges(3, [(0, 1), (1, 2)]);
        g.check_invariants().unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(stats, BuildStats::default());
        let d = degree_summary(&g).unwrap();
        assert_eq!(d.per_node_degree, vec![1, 2, 1]);
    }

    #[test]
    fn loops_and_duplicates_collapse() {
        let (g, stats) = SparseGraph::from_edges(2, [(0, 0), (0, 1), (1, 0)]);
        g.check_invariants().unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(stats.self_loops, 1);
        assert_eq!(stats.duplicates, 1);
    }

    #[test]
    fn empty_and_complete_density() {
        let d = degree_summary(&SparseGraph::empty(4)).unwrap();
        assert_eq!(d.density, 0.0);
        assert_eq!(d.per_node_degree, vec![0; 4]);

        let all: Vec<_> = (0..4u32)
            .flat_map(|u| (u + 1..4).map(move |v| (u, v)))
            .collect();
        let (k4, _) = SparseGraph::from_edges(4, all);
        let d = degree_summary(&k4).unwrap();
        assert_eq!(d.density, 1.0);
        assert_eq!(d.per_node_degree, vec![3; 4]);
        assert_eq!(d.average_degree, 3.0);
    }

    #[test]
    fn density_needs_two_nodes() {
        assert!(matches!(
            degree_summary(&SparseGraph::empty(1)),
            Err(Error::TooFewNodes(1))
        ));
    }

    #[test]
    fn edges_iterates_upper_triangle() {
        let (g, _) = SparseGraph::from_edges(4, [(3, 0), (2, 1), (0, 1)]);
        let e: Vec<_> = g.edges().collect();
        assert_eq!(e, vec![(0, 1), (0, 3), (1, 2)]);
    }
}
