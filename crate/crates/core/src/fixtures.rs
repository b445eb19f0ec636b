//! Small hand-checkable inputs shared by unit and integration tests.

use crate::graph::SparseGraph;
use crate::partition::IndexMap;

/// Eight nodes in two communities, `{0,1,2,3}` and `{4,5,6,7}`, joined by the
/// single edge 3-4. Blocks are `{0,1,2,4}` and `{3,5,6,7}`.
pub fn eight_node_example() -> (SparseGraph, IndexMap) {
    let edges = [
        (0, 1),
        (0, 2),
        (1, 2),
        (0, 3),
        (2, 3),
        (1, 3),
        (4, 5),
        (4, 6),
        (5, 6),
        (5, 7),
        (6, 7),
        (4, 7),
        (3, 4),
    ];
    let (g, _) = SparseGraph::from_edges(8, edges);
    let map = IndexMap::from_members(vec![vec![0, 1, 2, 4], vec![3, 5, 6, 7]])
        .expect("valid blocks");
    (g, map)
}
