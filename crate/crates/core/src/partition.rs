//! Block-wise splitting: nodes are shuffled into `R` equal blocks and worker
//! `r` stores the full adjacency rows (all `N` columns) of its block.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::labels::LabelVector;

/// Global <-> (block, local position) map for a block-wise split.
///
/// Within a block, members are kept in ascending global order, so local
/// position `w` is the rank of the node among its block mates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexMap {
    block_of: Vec<u32>,
    local_of: Vec<u32>,
    members: Vec<Vec<u32>>,
}

fn nearest_divisors(n: usize, r: usize) -> (Option<usize>, Option<usize>) {
    let below = (1..r.min(n + 1)).rev().find(|d| n % d == 0);
    let above = (r + 1..=n).find(|d| n % d == 0);
    (below, above)
}

impl IndexMap {
    /// Uniform random split of `0..num_nodes` into `workers` blocks of equal size.
    pub fn random(num_nodes: usize, workers: usize, seed: u64) -> Result<Self> {
        if workers == 0 || workers > num_nodes {
            return Err(Error::InvalidWorkers {
                nodes: num_nodes,
                workers,
            });
        }
        if num_nodes % workers != 0 {
            let (below, above) = nearest_divisors(num_nodes, workers);
            return Err(Error::IndivisibleWorkers {
                nodes: num_nodes,
                workers,
                below,
                above,
            });
        }
        let mut order: Vec<u32> = (0..num_nodes as u32).collect();
        if workers > 1 {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        let n = num_nodes / workers;
        let members = order
            .chunks(n)
            .map(|chunk| {
                let mut block = chunk.to_vec();
                block.sort_unstable();
                block
            })
            .collect();
        Self::from_members(members)
    }

    /// Builds a map from explicit blocks. Blocks must be disjoint, cover
    /// `0..N` and have equal sizes; each block is sorted.
    pub fn from_members(mut members: Vec<Vec<u32>>) -> Result<Self> {
        let workers = members.len();
        let num_nodes: usize = members.iter().map(Vec::len).sum();
        if workers == 0 || num_nodes == 0 {
            return Err(Error::InvalidWorkers {
                nodes: num_nodes,
                workers,
            });
        }
        let n = members[0].len();
        if members.iter().any(|b| b.len() != n) {
            return Err(Error::Config("blocks have unequal sizes".into()));
        }
        let mut block_of = vec![u32::MAX; num_nodes];
        let mut local_of = vec![u32::MAX; num_nodes];
        for (r, block) in members.iter_mut().enumerate() {
            block.sort_unstable();
            for (w, &node) in block.iter().enumerate() {
                let node = node as usize;
                if node >= num_nodes || block_of[node] != u32::MAX {
                    return Err(Error::Config(format!(
                        "node {node} is out of range or assigned twice"
                    )));
                }
                block_of[node] = r as u32;
                local_of[node] = w as u32;
            }
        }
        Ok(Self {
            block_of,
            local_of,
            members,
        })
    }

    /// Builds a map from per-node block and local indices (both 0-based).
    pub fn from_assignment(block_of: Vec<u32>, local_of: Vec<u32>) -> Result<Self> {
        if block_of.len() != local_of.len() {
            return Err(Error::LengthMismatch {
                expected: block_of.len(),
                actual: local_of.len(),
            });
        }
        let workers = block_of.iter().max().map_or(0, |&m| m as usize + 1);
        if workers == 0 || block_of.len() % workers != 0 {
            return Err(Error::Config("blocks have unequal sizes".into()));
        }
        let n = block_of.len() / workers;
        let mut members = vec![vec![u32::MAX; n]; workers];
        for (i, (&r, &w)) in block_of.iter().zip(&local_of).enumerate() {
            let slot = members[r as usize]
                .get_mut(w as usize)
                .ok_or_else(|| Error::Config(format!("local index {w} out of range")))?;
            if *slot != u32::MAX {
                return Err(Error::Config(format!("block {r} position {w} used twice")));
            }
            *slot = i as u32;
        }
        if members.iter().flatten().any(|&m| m == u32::MAX) {
            return Err(Error::Config("blocks have unequal sizes".into()));
        }
        let map = Self::from_members(members)?;
        if map.local_of != local_of {
            return Err(Error::Config(
                "local positions must follow ascending global order".into(),
            ));
        }
        Ok(map)
    }

    pub fn num_nodes(&self) -> usize {
        self.block_of.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.members.len()
    }

    /// Nodes per block, `n = N / R`.
    pub fn block_size(&self) -> usize {
        self.members[0].len()
    }

    pub fn block_of(&self, node: usize) -> usize {
        self.block_of[node] as usize
    }

    pub fn local_of(&self, node: usize) -> usize {
        self.local_of[node] as usize
    }

    /// Global ids of block `r`, in local order.
    pub fn members(&self, r: usize) -> &[u32] {
        &self.members[r]
    }

    /// Splits a global label vector into per-block local vectors.
    pub fn scatter(&self, global: &LabelVector) -> Result<Vec<LabelVector>> {
        if global.len() != self.num_nodes() {
            return Err(Error::LengthMismatch {
                expected: self.num_nodes(),
                actual: global.len(),
            });
        }
        Ok(self
            .members
            .iter()
            .map(|block| block.iter().map(|&i| global[i as usize]).collect())
            .collect())
    }
}

/// Rows of the full adjacency that belong to one worker, with global column ids.
#[derive(Clone, Debug)]
pub struct WorkerShard {
    worker_id: usize,
    num_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<u32>,
    index_map: Arc<IndexMap>,
}

impl WorkerShard {
    fn from_rows(
        worker_id: usize,
        num_cols: usize,
        index_map: Arc<IndexMap>,
        rows: impl Iterator<Item = Vec<u32>>,
    ) -> Self {
        let mut row_offsets = vec![0];
        let mut col_indices = Vec::new();
        for row in rows {
            col_indices.extend_from_slice(&row);
            row_offsets.push(col_indices.len());
        }
        Self {
            worker_id,
            num_cols,
            row_offsets,
            col_indices,
            index_map,
        }
    }

    pub fn worker_id(&self) -> usize {
        self.worker_id
    }

    /// Number of in-worker nodes `n`.
    pub fn num_rows(&self) -> usize {
        self.row_offsets.len() - 1
    }

    /// Number of columns, the global node count `N`.
    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    /// Stored edge endpoints, `sum_{i', j} a_{r,i'j}`.
    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    #[inline]
    pub fn row(&self, local: usize) -> &[u32] {
        &self.col_indices[self.row_offsets[local]..self.row_offsets[local + 1]]
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[u32] {
        &self.col_indices
    }

    pub fn index_map(&self) -> &Arc<IndexMap> {
        &self.index_map
    }

    /// Global ids of the in-worker nodes, in local order.
    pub fn members(&self) -> &[u32] {
        self.index_map.members(self.worker_id)
    }

    /// Copy of this shard that keeps only columns inside its own block: the
    /// induced-subgraph split used as the "random splitting" ablation. Not a
    /// supported fitting mode.
    pub fn restrict_to_own_block(&self) -> Self {
        let r = self.worker_id;
        let map = Arc::clone(&self.index_map);
        let rows = (0..self.num_rows()).map(|i| {
            self.row(i)
                .iter()
                .copied()
                .filter(|&j| map.block_of(j as usize) == r)
                .collect()
        });
        Self::from_rows(r, self.num_cols, Arc::clone(&self.index_map), rows)
    }
}

/// Cuts `graph` into the shards described by `map`.
pub fn shards_for(graph: &SparseGraph, map: Arc<IndexMap>) -> Result<Vec<WorkerShard>> {
    if map.num_nodes() != graph.num_nodes() {
        return Err(Error::LengthMismatch {
            expected: graph.num_nodes(),
            actual: map.num_nodes(),
        });
    }
    Ok((0..map.num_blocks())
        .map(|r| {
            let rows = map
                .members(r)
                .iter()
                .map(|&i| graph.neighbors(i as usize).to_vec());
            WorkerShard::from_rows(r, graph.num_nodes(), Arc::clone(&map), rows)
        })
        .collect())
}

/// Random block-wise split of `graph` across `workers` shards.
pub fn block_split(
    graph: &SparseGraph,
    workers: usize,
    seed: u64,
) -> Result<(Arc<IndexMap>, Vec<WorkerShard>)> {
    let map = Arc::new(IndexMap::random(graph.num_nodes(), workers, seed)?);
    let shards = shards_for(graph, Arc::clone(&map))?;
    Ok((map, shards))
}

/// Stacks shard rows back into a full graph.
pub fn reassemble_graph(shards: &[WorkerShard], map: &IndexMap) -> Result<SparseGraph> {
    if shards.len() != map.num_blocks() {
        return Err(Error::LengthMismatch {
            expected: map.num_blocks(),
            actual: shards.len(),
        });
    }
    let n_total = map.num_nodes();
    let mut arcs = Vec::new();
    for i in 0..n_total {
        let shard = &shards[map.block_of(i)];
        for &j in shard.row(map.local_of(i)) {
            arcs.push((i as u32, j));
        }
    }
    // from_edges symmetrizes, so also require that every arc came in both
    // directions before trusting the result.
    let (graph, stats) = SparseGraph::from_edges(n_total, arcs.iter().copied());
    if stats.self_loops > 0 || 2 * graph.num_edges() != arcs.len() {
        return Err(Error::Config("shard rows are not a symmetric adjacency".into()));
    }
    Ok(graph)
}

/// Global labels from per-worker local labels: `e_i = e_{r_i, w_i}`.
pub fn reassemble_labels(locals: &[LabelVector], map: &IndexMap) -> Result<LabelVector> {
    if locals.len() != map.num_blocks() {
        return Err(Error::LengthMismatch {
            expected: map.num_blocks(),
            actual: locals.len(),
        });
    }
    if let Some(bad) = locals.iter().find(|l| l.len() != map.block_size()) {
        return Err(Error::LengthMismatch {
            expected: map.block_size(),
            actual: bad.len(),
        });
    }
    Ok((0..map.num_nodes())
        .map(|i| locals[map.block_of(i)][map.local_of(i)])
        .collect())
}

/// For each worker, whether its in-worker nodes include every label `0..k`
/// of `truth`.
pub fn shard_coverage_check(map: &IndexMap, truth: &LabelVector, k: usize) -> Vec<bool> {
    (0..map.num_blocks())
        .map(|r| {
            let mut seen = vec![false; k];
            let mut missing = k;
            for &i in map.members(r) {
                let l = truth[i as usize] as usize;
                if l < k && !seen[l] {
                    seen[l] = true;
                    missing -= 1;
                    if missing == 0 {
                        break;
                    }
                }
            }
            missing == 0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::eight_node_example;

    #[test]
    fn eight_node_shards_hold_their_rows() {
        let (g, map) = eight_node_example();
        let shards = shards_for(&g, Arc::new(map)).unwrap();
        assert_eq!(shards[0].num_rows(), 4);
        assert_eq!(shards[0].num_cols(), 8);
        for (local, global) in [0usize, 1, 2, 4].into_iter().enumerate() {
            assert_eq!(shards[0].row(local), g.neighbors(global));
        }
    }

    #[test]
    fn single_worker_is_identity() {
        let (g, _) = eight_node_example();
        let (map, shards) = block_split(&g, 1, 99).unwrap();
        assert_eq!(shards.len(), 1);
        for i in 0..8 {
            assert_eq!(map.local_of(i), i);
            assert_eq!(shards[0].row(i), g.neighbors(i));
        }
    }

    #[test]
    fn indivisible_worker_count_suggests_neighbors() {
        let g = SparseGraph::empty(10);
        match block_split(&g, 3, 0) {
            Err(Error::IndivisibleWorkers { below, above, .. }) => {
                assert_eq!(below, Some(2));
                assert_eq!(above, Some(5));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            block_split(&g, 11, 0),
            Err(Error::InvalidWorkers { .. })
        ));
        assert!(matches!(block_split(&g, 0, 0), Err(Error::InvalidWorkers { .. })));
    }

    #[test]
    fn six_nodes_three_workers_round_trip() {
        let (g, _) = SparseGraph::from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)]);
        let (map, shards) = block_split(&g, 3, 17).unwrap();
        assert_eq!(map.block_size(), 2);
        assert_eq!(reassemble_graph(&shards, &map).unwrap(), g);
    }

    #[test]
    fn figure_four_label_merge() {
        let (_, map) = eight_node_example();
        let locals = [LabelVector::new(vec![0, 0, 0, 1]), LabelVector::new(vec![0, 1, 1, 1])];
        let global = reassemble_labels(&locals, &map).unwrap();
        assert_eq!(&*global, &[0, 0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn reassemble_rejects_bad_lengths() {
        let (_, map) = eight_node_example();
        let short = [LabelVector::new(vec![0; 4])];
        assert!(reassemble_labels(&short, &map).is_err());
        let ragged = [LabelVector::new(vec![0; 4]), LabelVector::new(vec![0; 3])];
        assert!(reassemble_labels(&ragged, &map).is_err());
    }

    #[test]
    fn coverage_edge_cases() {
        let map = IndexMap::random(12, 6, 3).unwrap();
        let truth = LabelVector::new((0..12).map(|i| i % 3).collect());
        // n = 2 < K = 3
        assert!(shard_coverage_check(&map, &truth, 3).iter().all(|&c| !c));
        let single = LabelVector::constant(12);
        assert!(shard_coverage_check(&map, &single, 1).iter().all(|&c| c));
    }

    #[test]
    fn restricted_shard_keeps_block_columns_only() {
        let (g, map) = eight_node_example();
        let map = Arc::new(map);
        let shards = shards_for(&g, Arc::clone(&map)).unwrap();
        let induced = shards[0].restrict_to_own_block();
        for i in 0..induced.num_rows() {
            for &j in induced.row(i) {
                assert_eq!(map.block_of(j as usize), 0);
            }
        }
        // node 4 (0-based 3) is in block 2, so its column disappears from row 0
        assert_eq!(induced.row(0), &[1, 2]);
    }

    #[test]
    fn from_assignment_round_trip() {
        let map = IndexMap::random(20, 4, 5).unwrap();
        let block_of = (0..20).map(|i| map.block_of(i) as u32).collect();
        let local_of = (0..20).map(|i| map.local_of(i) as u32).collect();
        assert_eq!(IndexMap::from_assignment(block_of, local_of).unwrap(), map);
    }
}
