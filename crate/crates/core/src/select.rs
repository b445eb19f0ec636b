//! Choosing the number of communities with a corrected BIC: each worker
//! evaluates the Bernoulli block log-likelihood of its shard, and the master
//! subtracts `N log K' + K'(K'+1)/2 log N` from the sum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::labels::LabelVector;
use crate::master::{fit_shards, FitConfig};
use crate::partition::{block_split, WorkerShard};
use crate::worker::{worker_summary, Mode};

/// Clamp for block densities before taking logs.
pub const THETA_CLAMP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkerLoglik {
    pub value: f64,
    /// Some block had no node pairs, so its density was undefined.
    pub degenerate: bool,
}

/// Block log-likelihood of one shard under labels `0..k`.
///
/// Block `(l, c)` pairs the shard's `n_{r,l}` nodes labelled `l` with the
/// `N_c` nodes labelled `c` anywhere in the graph; its density estimate is
/// `O_{r,lc} / (n_{r,l} N_c)`.
pub fn worker_loglik(shard: &WorkerShard, labels: &[u32], k: usize) -> Result<WorkerLoglik> {
    if labels.len() != shard.num_cols() {
        return Err(Error::LengthMismatch {
            expected: shard.num_cols(),
            actual: labels.len(),
        });
    }
    LabelVector::new(labels.to_vec()).check_range(k)?;
    let summary = worker_summary(shard, labels, k);
    let mut sizes = vec![0u64; k];
    for &l in labels {
        sizes[l as usize] += 1;
    }
    let mut value = 0.0;
    let mut degenerate = false;
    for l in 0..k {
        for c in 0..k {
            let pairs = summary.node_counts[l] as f64 * sizes[c] as f64;
            let edges = summary.block(l, c) as f64;
            if pairs == 0.0 {
                degenerate = true;
                continue;
            }
            let theta = (edges / pairs).clamp(THETA_CLAMP, 1.0 - THETA_CLAMP);
            value += edges * (theta / (1.0 - theta)).ln() + pairs * (1.0 - theta).ln();
        }
    }
    Ok(WorkerLoglik { value, degenerate })
}

/// `N log K' + K'(K'+1)/2 log N`.
pub fn penalty(num_nodes: usize, k: usize) -> f64 {
    let n = num_nodes as f64;
    let k = k as f64;
    n * k.ln() + k * (k + 1.0) / 2.0 * n.ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KCandidateScore {
    pub k: usize,
    #[serde(skip)]
    pub labels: Option<LabelVector>,
    pub worker_logliks: Vec<f64>,
    pub penalty: f64,
    /// Summed log-likelihood minus penalty; `-inf` when the fit failed.
    pub score: f64,
    pub degenerate: bool,
    pub failed: bool,
}

#[derive(Clone, Debug)]
pub struct Selection {
    pub best: usize,
    pub scores: Vec<KCandidateScore>,
}

/// Fits every candidate on one split and returns the highest score; ties go
/// to the smaller `K'`. `base.k` is ignored.
pub fn select_k(graph: &SparseGraph, candidates: &[usize], mode: Mode, base: &FitConfig) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::Config("no candidate community counts".into()));
    }
    let mut ks = candidates.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let (map, shards) = block_split(graph, base.workers, base.seed)?;
    let n = graph.num_nodes();
    let mut scores = Vec::with_capacity(ks.len());
    for &k in &ks {
        let cfg = FitConfig { k, ..base.clone() };
        let pen = penalty(n, k);
        let fitted = fit_shards(&map, &shards, mode, &cfg).and_then(|res| {
            let parts = shards
                .iter()
                .map(|s| worker_loglik(s, &res.labels, k))
                .collect::<Result<Vec<_>>>()?;
            Ok((res.labels, parts))
        });
        scores.push(match fitted {
            Ok((labels, parts)) => {
                let total: f64 = parts.iter().map(|p| p.value).sum();
                KCandidateScore {
                    k,
                    labels: Some(labels),
                    worker_logliks: parts.iter().map(|p| p.value).collect(),
                    penalty: pen,
                    score: total - pen,
                    degenerate: parts.iter().any(|p| p.degenerate),
                    failed: false,
                }
            }
            Err(e) => {
                log::warn!("fit with K = {k} failed: {e}");
                KCandidateScore {
                    k,
                    labels: None,
                    worker_logliks: Vec::new(),
                    penalty: pen,
                    score: f64::NEG_INFINITY,
                    degenerate: false,
                    failed: true,
                }
            }
        });
    }
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.score > scores[best].score {
            best = i;
        }
    }
    Ok(Selection {
        best: scores[best].k,
        scores,
    })
}
