//! Text formats: SNAP-style edge lists, label files and partition files.
//!
//! All parsers take a [`BufRead`] so they can run over untrusted bytes; they
//! report the 1-based line number of the first offending line.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{BuildStats, SparseGraph};
use crate::labels::LabelVector;
use crate::partition::IndexMap;

/// A graph read from disk together with the original node ids.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: SparseGraph,
    /// `original_ids[i]` is the id the file used for compact node `i`.
    pub original_ids: Vec<u64>,
    pub stats: BuildStats,
}

impl LoadedGraph {
    pub fn id_lookup(&self) -> HashMap<u64, usize> {
        self.original_ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i))
            .collect()
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Iterates over meaningful lines: skips blanks and `#` comments, yields
/// `(line_number, trimmed_text)`.
fn content_lines<R: BufRead>(
    mut reader: R,
    mut visit: impl FnMut(usize, &str) -> Result<()>,
) -> Result<()> {
    let mut buf = Vec::new();
    let mut line_no = 0usize;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            return Ok(());
        }
        line_no += 1;
        let text = std::str::from_utf8(&buf).map_err(|_| parse_err(line_no, "invalid UTF-8"))?;
        let text = text.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        visit(line_no, text)?;
    }
}

fn parse_id(line: usize, token: &str) -> Result<u64> {
    token
        .parse::<u64>()
        .map_err(|_| parse_err(line, format!("expected a non-negative integer, found {token:?}")))
}

/// Parses whitespace-separated `u v` pairs, one per line.
///
/// The result is symmetrized, self-loops and repeated edges are dropped, and
/// node ids are compacted to `0..N` in ascending order of original id. A node
/// that appears only in a self-loop is still a node.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<LoadedGraph> {
    let mut pairs: Vec<(u64, u64)> = Vec::new();
    content_lines(reader, |line, text| {
        let mut tokens = text.split_whitespace();
        let (Some(a), Some(b), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(parse_err(line, "expected exactly two node ids"));
        };
        pairs.push((parse_id(line, a)?, parse_id(line, b)?));
        Ok(())
    })?;
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }

    let mut ids: Vec<u64> = pairs.iter().flat_map(|&(u, v)| [u, v]).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() > u32::MAX as usize {
        return Err(Error::Config("too many distinct node ids".into()));
    }
    let compact = |id: u64| ids.binary_search(&id).expect("id collected above") as u32;
    let edges: Vec<(u32, u32)> = pairs.iter().map(|&(u, v)| (compact(u), compact(v))).collect();
    let (graph, stats) = SparseGraph::from_edges(ids.len(), edges);
    Ok(LoadedGraph {
        graph,
        original_ids: ids,
        stats,
    })
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<LoadedGraph> {
    parse_edge_list(BufReader::new(File::open(path)?))
}

/// Writes one `u<TAB>v` line per undirected edge (`u < v` in compact order).
/// Isolated nodes are written as self-loops so a reload keeps them. With
/// `ids`, compact indices are translated back to original ids.
pub fn write_edge_list<W: Write>(
    mut out: W,
    graph: &SparseGraph,
    ids: Option<&[u64]>,
) -> std::io::Result<()> {
    let id = |i: usize| ids.map_or(i as u64, |ids| ids[i]);
    for (u, v) in graph.edges() {
        writeln!(out, "{}\t{}", id(u as usize), id(v as usize))?;
    }
    for i in (0..graph.num_nodes()).filter(|&i| graph.degree(i) == 0) {
        writeln!(out, "{}\t{}", id(i), id(i))?;
    }
    out.flush()
}

/// `(node_id, label)` rows of a label file, labels converted to 0-based.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelFile {
    pub entries: Vec<(u64, u32)>,
}

impl LabelFile {
    /// Orders the labels by `ids`; every id must be present exactly once.
    pub fn align(&self, ids: &[u64]) -> Result<LabelVector> {
        let lookup: HashMap<u64, u32> = self.entries.iter().copied().collect();
        if lookup.len() != ids.len() {
            return Err(Error::LengthMismatch {
                expected: ids.len(),
                actual: lookup.len(),
            });
        }
        ids.iter()
            .map(|id| {
                lookup
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::Config(format!("node {id} has no label")))
            })
            .collect::<Result<Vec<_>>>()
            .map(LabelVector::new)
    }

    /// Node ids in ascending order.
    pub fn sorted_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.entries.iter().map(|e| e.0).collect();
        ids.sort_unstable();
        ids
    }
}

/// Parses `node_id<ws>label` lines with labels in `1..`.
pub fn parse_labels<R: BufRead>(reader: R) -> Result<LabelFile> {
    let mut entries = Vec::new();
    let mut seen = HashMap::new();
    content_lines(reader, |line, text| {
        let mut tokens = text.split_whitespace();
        let (Some(a), Some(b), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(parse_err(line, "expected `node_id label`"));
        };
        let id = parse_id(line, a)?;
        let label: u32 = b
            .parse()
            .map_err(|_| parse_err(line, format!("bad label {b:?}")))?;
        if label == 0 {
            return Err(parse_err(line, "labels start at 1"));
        }
        if seen.insert(id, line).is_some() {
            return Err(parse_err(line, format!("node {id} labelled twice")));
        }
        entries.push((id, label - 1));
        Ok(())
    })?;
    Ok(LabelFile { entries })
}

pub fn read_label_file(path: impl AsRef<Path>) -> Result<LabelFile> {
    parse_labels(BufReader::new(File::open(path)?))
}

/// Writes `node_id<TAB>label` with labels shifted to `1..=K`.
pub fn write_labels<W: Write>(
    mut out: W,
    labels: &LabelVector,
    ids: Option<&[u64]>,
) -> std::io::Result<()> {
    for (i, &l) in labels.iter().enumerate() {
        let id = ids.map_or(i as u64, |ids| ids[i]);
        writeln!(out, "{id}\t{}", l + 1)?;
    }
    out.flush()
}

/// Contents of a partition file: header `R n seed`, then `node_id r w` lines
/// with 1-based block and local position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionFile {
    pub workers: usize,
    pub block_size: usize,
    pub seed: u64,
    /// `(node_id, block, local)`, 0-based block and local index.
    pub rows: Vec<(u64, u32, u32)>,
}

impl PartitionFile {
    pub fn from_map(map: &IndexMap, seed: u64, ids: Option<&[u64]>) -> Self {
        let rows = (0..map.num_nodes())
            .map(|i| {
                let id = ids.map_or(i as u64, |ids| ids[i]);
                (id, map.block_of(i) as u32, map.local_of(i) as u32)
            })
            .collect();
        Self {
            workers: map.num_blocks(),
            block_size: map.block_size(),
            seed,
            rows,
        }
    }

    /// Rebuilds the index map, with rows ordered by `ids` (or by node id
    /// `0..N` when `ids` is `None`).
    pub fn to_index_map(&self, ids: Option<&[u64]>) -> Result<IndexMap> {
        let lookup: HashMap<u64, (u32, u32)> =
            self.rows.iter().map(|&(id, r, w)| (id, (r, w))).collect();
        let n = self.rows.len();
        if lookup.len() != n {
            return Err(Error::Config("partition file repeats a node id".into()));
        }
        let mut block_of = Vec::with_capacity(n);
        let mut local_of = Vec::with_capacity(n);
        for i in 0..n {
            let id = match ids {
                Some(ids) => *ids.get(i).ok_or(Error::LengthMismatch {
                    expected: ids.len(),
                    actual: n,
                })?,
                None => i as u64,
            };
            let &(r, w) = lookup
                .get(&id)
                .ok_or_else(|| Error::Config(format!("node {id} missing from partition")))?;
            block_of.push(r);
            local_of.push(w);
        }
        if let Some(ids) = ids {
            if ids.len() != n {
                return Err(Error::LengthMismatch {
                    expected: ids.len(),
                    actual: n,
                });
            }
        }
        let map = IndexMap::from_assignment(block_of, local_of)?;
        if map.num_blocks() != self.workers || map.block_size() != self.block_size {
            return Err(Error::Config(
                "partition header disagrees with its rows".into(),
            ));
        }
        Ok(map)
    }
}

pub fn write_partition<W: Write>(mut out: W, file: &PartitionFile) -> std::io::Result<()> {
    writeln!(out, "{} {} {}", file.workers, file.block_size, file.seed)?;
    for &(id, r, w) in &file.rows {
        writeln!(out, "{id} {} {}", r + 1, w + 1)?;
    }
    out.flush()
}

pub fn parse_partition<R: BufRead>(reader: R) -> Result<PartitionFile> {
    let mut header: Option<(usize, usize, u64)> = None;
    let mut rows = Vec::new();
    content_lines(reader, |line, text| {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(parse_err(line, "expected three fields"));
        }
        let a = parse_id(line, tokens[0])?;
        let b = parse_id(line, tokens[1])?;
        let c = parse_id(line, tokens[2])?;
        match header {
            None => {
                if a == 0 || b == 0 {
                    return Err(parse_err(line, "worker count and block size must be positive"));
                }
                header = Some((a as usize, b as usize, c));
            }
            Some((workers, block_size, _)) => {
                if b == 0 || b as usize > workers || c == 0 || c as usize > block_size {
                    return Err(parse_err(line, "block or local index out of range"));
                }
                rows.push((a, (b - 1) as u32, (c - 1) as u32));
            }
        }
        Ok(())
    })?;
    let (workers, block_size, seed) = header.ok_or(Error::EmptyInput)?;
    Ok(PartitionFile {
        workers,
        block_size,
        seed,
        rows,
    })
}
