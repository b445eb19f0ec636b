//! The master side of a fit: initial labels, parameter aggregation across
//! workers, the multi-round two-step exchange, and the ledger.
//!
//! Each round `s` runs four exchanges over the transport:
//!
//! 1. broadcast the global labels `e(s)` to every worker;
//! 2. gather the block-edge counts `O_r` and community sizes `n_r`;
//! 3. broadcast the aggregated `(pi, Lambda)` (or `(pi, Psi)`);
//! 4. gather each worker's updated in-worker labels and its objective.
//!
//! Replies are reduced in worker-id order, so results do not depend on which
//! worker finishes first.

use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::Arc;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::labels::LabelVector;
use crate::matrix::Square;
use crate::partition::{block_split, reassemble_labels, shards_for, IndexMap, WorkerShard};
use crate::protocol::{in_process_network, ChannelEndpoint, Message, Peer, RoundLedger, RoundRecord, Transport};
use crate::spectral::{init_labels_scp_with, init_labels_ssc_with, SpectralOptions};
use crate::worker::{
    ascent_violations, count_stats, em_dcsbm, em_sbm, local_label_update, worker_summary, EmOptions, Mode,
    ModelParams, WorkerSummary,
};

/// Relative drop that counts as an EM ascent violation.
pub const ASCENT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// Regularized spectral clustering.
    Scp,
    /// Spherical spectral clustering.
    Ssc,
    /// Labels supplied by the caller.
    Given(LabelVector),
}

impl InitMode {
    /// The initializer each model starts from by default.
    pub fn default_for(mode: Mode) -> Self {
        match mode {
            Mode::Sbm => InitMode::Scp,
            Mode::Dcsbm => InitMode::Ssc,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub k: usize,
    pub workers: usize,
    /// Drives the split and the initializer.
    pub seed: u64,
    pub max_rounds: usize,
    /// Relative change of the summed objective that ends the outer loop.
    pub tol: f64,
    pub em: EmOptions,
    /// `None` picks SCP for the SBM and SSC for the DCSBM.
    pub init: Option<InitMode>,
    pub spectral: SpectralOptions,
}

impl FitConfig {
    pub fn new(k: usize, workers: usize, seed: u64) -> Self {
        Self {
            k,
            workers,
            seed,
            max_rounds: 10,
            tol: 1e-6,
            em: EmOptions::default(),
            init: None,
            spectral: SpectralOptions::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > u16::MAX as usize {
            return Err(Error::Config(format!("number of communities {} out of range", self.k)));
        }
        if self.max_rounds == 0 {
            return Err(Error::Config("max_rounds must be at least 1".into()));
        }
        Ok(())
    }

    fn init_seed(&self) -> u64 {
        self.seed ^ 0x9e37_79b9_7f4a_7c15
    }
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub labels: LabelVector,
    /// Parameters broadcast in the last round.
    pub params: ModelParams,
    pub ledger: RoundLedger,
    pub rounds: usize,
    pub converged: bool,
    pub degenerate_flags: Vec<bool>,
    pub initial_labels: LabelVector,
    /// The spectral initializer fell back to random labels.
    pub init_collapsed: bool,
    /// Global labels after every round.
    pub trajectory: Vec<LabelVector>,
}

/// Initial global labels computed from the first shard.
pub fn initial_labels(shard: &WorkerShard, mode: Mode, cfg: &FitConfig) -> Result<(LabelVector, bool)> {
    let init = cfg.init.clone().unwrap_or_else(|| InitMode::default_for(mode));
    match init {
        InitMode::Given(labels) => {
            if labels.len() != shard.num_cols() {
                return Err(Error::LengthMismatch {
                    expected: shard.num_cols(),
                    actual: labels.len(),
                });
            }
            labels.check_range(cfg.k)?;
            Ok((labels, false))
        }
        InitMode::Scp => {
            let out = init_labels_scp_with(shard, cfg.k, cfg.init_seed(), &cfg.spectral);
            Ok((out.labels, out.rank_collapsed))
        }
        InitMode::Ssc => {
            let out = init_labels_ssc_with(shard, cfg.k, cfg.init_seed(), &cfg.spectral);
            Ok((out.labels, out.rank_collapsed))
        }
    }
}

/// Global `(pi, Lambda)` from worker summaries; in DCSBM mode the rows of
/// `Lambda` are normalized into `Psi`. A community with no nodes gets the
/// mean row of the others and sets the returned flag.
pub fn aggregate_global_params(summaries: &[WorkerSummary], num_nodes: usize, mode: Mode) -> Result<(ModelParams, bool)> {
    let k = summaries
        .first()
        .map(|s| s.k)
        .ok_or_else(|| Error::Protocol("no worker summaries".into()))?;
    let mut blocks = vec![0u64; k * k];
    let mut sizes = vec![0u64; k];
    for s in summaries {
        if s.k != k || s.block_counts.len() != k * k || s.node_counts.len() != k {
            return Err(Error::Protocol("worker summaries disagree on K".into()));
        }
        for (a, b) in blocks.iter_mut().zip(&s.block_counts) {
            *a += b;
        }
        for (a, b) in sizes.iter_mut().zip(&s.node_counts) {
            *a += b;
        }
    }
    let total: u64 = sizes.iter().sum();
    if total != num_nodes as u64 {
        return Err(Error::Protocol(format!(
            "summaries cover {total} nodes, expected {num_nodes}"
        )));
    }
    let pi: Vec<f64> = sizes.iter().map(|&s| s as f64 / num_nodes as f64).collect();
    let mut rates = Square::from_fn(k, |l, c| {
        if sizes[l] > 0 {
            blocks[l * k + c] as f64 / sizes[l] as f64
        } else {
            0.0
        }
    });
    let filled: Vec<usize> = (0..k).filter(|&l| sizes[l] > 0).collect();
    let degenerate = filled.len() < k;
    if degenerate {
        let mean: Vec<f64> = (0..k)
            .map(|c| filled.iter().map(|&l| rates[(l, c)]).sum::<f64>() / filled.len().max(1) as f64)
            .collect();
        for l in (0..k).filter(|&l| sizes[l] == 0) {
            rates.row_mut(l).copy_from_slice(&mean);
        }
    }
    if mode == Mode::Dcsbm {
        for l in 0..k {
            let row = rates.row_mut(l);
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                row.iter_mut().for_each(|x| *x /= s);
            } else {
                row.fill(1.0 / k as f64);
            }
        }
    }
    Ok((ModelParams { mode, pi, rates }, degenerate))
}

/// Distributed pseudo-likelihood fit of an SBM.
pub fn run_dpl(graph: &SparseGraph, cfg: &FitConfig) -> Result<FitResult> {
    fit(graph, Mode::Sbm, cfg)
}

/// Distributed conditional pseudo-likelihood fit of a DCSBM.
pub fn run_dcpl(graph: &SparseGraph, cfg: &FitConfig) -> Result<FitResult> {
    fit(graph, Mode::Dcsbm, cfg)
}

/// Splits `graph` with `cfg.seed` and fits in the given mode.
pub fn fit(graph: &SparseGraph, mode: Mode, cfg: &FitConfig) -> Result<FitResult> {
    let (map, shards) = block_split(graph, cfg.workers, cfg.seed)?;
    fit_shards(&map, &shards, mode, cfg)
}

struct WorkerReport {
    worker: u32,
    ops: u64,
    em_iters: u32,
    violations: u32,
    degenerate: bool,
}

/// Runs the protocol on prepared shards, one thread per worker.
pub fn fit_shards(map: &Arc<IndexMap>, shards: &[WorkerShard], mode: Mode, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    if shards.len() != map.num_blocks() || shards.is_empty() {
        return Err(Error::LengthMismatch {
            expected: map.num_blocks(),
            actual: shards.len(),
        });
    }
    let (init, collapsed) = initial_labels(&shards[0], mode, cfg)?;
    let (master, endpoints) = in_process_network(shards.len());
    let (report_tx, report_rx) = channel();

    thread::scope(|scope| {
        let handles: Vec<_> = shards
            .iter()
            .zip(endpoints)
            .map(|(shard, ep)| {
                let tx = report_tx.clone();
                let em = cfg.em;
                scope.spawn(move || run_worker(shard, mode, &em, ep, tx))
            })
            .collect();
        drop(report_tx);
        let outcome = drive(&master, &report_rx, map, mode, cfg, init, collapsed);
        for r in 0..shards.len() {
            // a worker that already quit has dropped its inbox
            let _ = master.send_message(Peer::Worker(r as u32), &Message::Shutdown);
        }
        let mut worker_error = None;
        for h in handles {
            match h.join() {
                Ok(Ok(())) => {}
                Ok(Err(e)) => worker_error = worker_error.or(Some(e)),
                Err(_) => worker_error = worker_error.or(Some(Error::Protocol("worker panicked".into()))),
            }
        }
        match (outcome, worker_error) {
            (Ok(res), None) => Ok(res),
            (Err(_), Some(e)) | (Ok(_), Some(e)) => Err(e),
            (Err(e), None) => Err(e),
        }
    })
}

fn run_worker(
    shard: &WorkerShard,
    mode: Mode,
    em: &EmOptions,
    ep: ChannelEndpoint,
    reports: Sender<WorkerReport>,
) -> Result<()> {
    let result = worker_loop(shard, mode, em, &ep, &reports);
    if result.is_err() {
        // tell the master to stop waiting for this worker
        let _ = ep.send_message(Peer::Master, &Message::Shutdown);
    }
    result
}

fn worker_loop(
    shard: &WorkerShard,
    mode: Mode,
    em: &EmOptions,
    ep: &ChannelEndpoint,
    reports: &Sender<WorkerReport>,
) -> Result<()> {
    let id = shard.worker_id() as u32;
    let mut current: Option<(u32, LabelVector)> = None;
    let mut summary_ops = 0u64;
    loop {
        let (_, msg, _) = ep.recv_message()?;
        match msg {
            Message::Shutdown => return Ok(()),
            Message::Labels { round, k, labels } => {
                if labels.len() != shard.num_cols() {
                    return Err(Error::LengthMismatch {
                        expected: shard.num_cols(),
                        actual: labels.len(),
                    });
                }
                let summary = worker_summary(shard, &labels, k as usize);
                summary_ops = shard.nnz() as u64;
                ep.send_message(Peer::Master, &Message::Summary {
                    round,
                    worker: id,
                    summary,
                })?;
                current = Some((k, labels));
            }
            Message::Params { round, params } => {
                let (k, labels) = current
                    .as_ref()
                    .ok_or_else(|| Error::Protocol("parameters arrived before labels".into()))?;
                if params.k() != *k as usize || params.mode != mode {
                    return Err(Error::Protocol("parameters do not match the labels".into()));
                }
                let stats = count_stats(shard, labels, *k as usize);
                let outcome = match mode {
                    Mode::Sbm => em_sbm(&stats, &params, em),
                    Mode::Dcsbm => em_dcsbm(&stats, &params, em),
                };
                let local = local_label_update(&outcome.tau);
                reports
                    .send(WorkerReport {
                        worker: id,
                        ops: summary_ops + shard.nnz() as u64 + outcome.ops,
                        em_iters: outcome.iterations() as u32,
                        violations: ascent_violations(&outcome.trace, ASCENT_TOL) as u32,
                        degenerate: outcome.degenerate,
                    })
                    .map_err(|_| Error::Protocol("master stopped listening".into()))?;
                ep.send_message(Peer::Master, &Message::LocalLabels {
                    round,
                    worker: id,
                    k: *k,
                    labels: local,
                    objective: outcome.objective(),
                })?;
            }
            other => return Err(Error::Protocol(format!("worker got unexpected {other:?}"))),
        }
    }
}

/// Collects one reply per worker, indexed by worker id.
fn gather(master: &ChannelEndpoint, workers: usize, record: &mut RoundRecord) -> Result<Vec<Message>> {
    let mut slots: Vec<Option<Message>> = vec![None; workers];
    for _ in 0..workers {
        let (from, msg, bytes) = master.recv_message()?;
        let Peer::Worker(r) = from else {
            return Err(Error::Protocol("master received its own message".into()));
        };
        if msg == Message::Shutdown {
            return Err(Error::Protocol(format!("worker {r} failed")));
        }
        let slot = slots
            .get_mut(r as usize)
            .ok_or_else(|| Error::Protocol(format!("unknown worker {r}")))?;
        if slot.is_some() {
            return Err(Error::Protocol(format!("worker {r} replied twice")));
        }
        record.bits_gathered += msg.payload_bits();
        record.wire_bytes += bytes as u64;
        record.messages += 1;
        *slot = Some(msg);
    }
    Ok(slots.into_iter().map(|m| m.expect("every slot filled")).collect())
}

fn broadcast(master: &ChannelEndpoint, workers: usize, msg: &Message, record: &mut RoundRecord) -> Result<()> {
    for r in 0..workers {
        let bytes = master.send_message(Peer::Worker(r as u32), msg)?;
        record.bits_broadcast += msg.payload_bits();
        record.wire_bytes += bytes as u64;
        record.messages += 1;
    }
    Ok(())
}

fn drive(
    master: &ChannelEndpoint,
    reports: &Receiver<WorkerReport>,
    map: &IndexMap,
    mode: Mode,
    cfg: &FitConfig,
    init: LabelVector,
    init_collapsed: bool,
) -> Result<FitResult> {
    let workers = map.num_blocks();
    let num_nodes = map.num_nodes();
    let k = cfg.k as u32;
    let mut labels = init.clone();
    let mut ledger = RoundLedger::default();
    let mut trajectory = Vec::new();
    let mut degenerate_flags = Vec::new();
    let mut converged = false;
    let mut last_params = None;

    for round in 0..cfg.max_rounds as u32 {
        let mut record = RoundRecord {
            round: round + 1,
            ..Default::default()
        };
        broadcast(master, workers, &Message::Labels {
            round,
            k,
            labels: labels.clone(),
        }, &mut record)?;

        let summaries = gather(master, workers, &mut record)?
            .into_iter()
            .map(|m| match m {
                Message::Summary { summary, .. } => Ok(summary),
                other => Err(Error::Protocol(format!("expected a summary, got {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let (params, empty_community) = aggregate_global_params(&summaries, num_nodes, mode)?;
        broadcast(master, workers, &Message::Params {
            round,
            params: params.clone(),
        }, &mut record)?;

        let mut locals = Vec::with_capacity(workers);
        let mut objective = 0.0;
        for m in gather(master, workers, &mut record)? {
            match m {
                Message::LocalLabels {
                    labels, objective: o, ..
                } => {
                    locals.push(labels);
                    objective += o;
                }
                other => return Err(Error::Protocol(format!("expected local labels, got {other:?}"))),
            }
        }
        let mut by_worker: Vec<Option<WorkerReport>> = (0..workers).map(|_| None).collect();
        for _ in 0..workers {
            let rep = reports
                .recv()
                .map_err(|_| Error::Protocol("worker telemetry closed".into()))?;
            let w = rep.worker as usize;
            by_worker[w] = Some(rep);
        }
        record.em_iters = Vec::with_capacity(workers);
        let mut em_degenerate = false;
        for rep in by_worker.into_iter().map(|r| r.expect("one report per worker")) {
            record.ops += rep.ops;
            record.max_worker_ops = record.max_worker_ops.max(rep.ops);
            record.em_iters.push(rep.em_iters);
            record.ascent_violations += rep.violations;
            em_degenerate |= rep.degenerate;
        }
        record.objective = objective;
        record.degenerate = empty_community || em_degenerate;

        labels = reassemble_labels(&locals, map)?;
        trajectory.push(labels.clone());
        degenerate_flags.push(record.degenerate);
        last_params = Some(params);
        let previous = ledger.rounds.last().map(|r| r.objective);
        ledger.rounds.push(record);
        if let Some(prev) = previous {
            if (objective - prev).abs() <= cfg.tol * prev.abs() {
                converged = true;
                break;
            }
        }
    }

    let rounds = ledger.rounds.len();
    Ok(FitResult {
        labels,
        params: last_params.expect("at least one round"),
        ledger,
        rounds,
        converged,
        degenerate_flags,
        initial_labels: init,
        init_collapsed,
        trajectory,
    })
}

/// Block-edge counts and community sizes of the whole graph.
pub fn global_summary(graph: &SparseGraph, labels: &[u32], k: usize) -> WorkerSummary {
    let mut block_counts = vec![0u64; k * k];
    let mut node_counts = vec![0u64; k];
    for i in 0..graph.num_nodes() {
        let l = labels[i] as usize;
        node_counts[l] += 1;
        for &j in graph.neighbors(i) {
            block_counts[l * k + labels[j as usize] as usize] += 1;
        }
    }
    WorkerSummary {
        k,
        block_counts,
        node_counts,
    }
}

/// Single-machine pseudo-likelihood: the same outer loop with no split,
/// no messages and no threads. Used as a reference for the distributed fit.
pub fn run_pl_single(graph: &SparseGraph, mode: Mode, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let n = graph.num_nodes();
    let k = cfg.k;
    let whole = Arc::new(IndexMap::random(n, 1, cfg.seed)?);
    let shard = shards_for(graph, whole)?.remove(0);
    let (init, collapsed) = initial_labels(&shard, mode, cfg)?;

    let mut labels = init.clone();
    let mut ledger = RoundLedger::default();
    let mut trajectory = Vec::new();
    let mut degenerate_flags = Vec::new();
    let mut converged = false;
    let mut last_params = None;
    for round in 0..cfg.max_rounds as u32 {
        let summary = global_summary(graph, &labels, k);
        let (params, empty) = aggregate_global_params(std::slice::from_ref(&summary), n, mode)?;
        let stats = {
            let rows: Vec<Vec<u32>> = (0..n)
                .map(|i| {
                    let mut row = vec![0u32; k];
                    for &j in graph.neighbors(i) {
                        row[labels[j as usize] as usize] += 1;
                    }
                    row
                })
                .collect();
            crate::worker::CountStats::from_rows(k, &rows)
        };
        let outcome = match mode {
            Mode::Sbm => em_sbm(&stats, &params, &cfg.em),
            Mode::Dcsbm => em_dcsbm(&stats, &params, &cfg.em),
        };
        labels = local_label_update(&outcome.tau);
        trajectory.push(labels.clone());
        let degenerate = empty || outcome.degenerate;
        degenerate_flags.push(degenerate);
        let objective = outcome.objective();
        let previous = ledger.rounds.last().map(|r| r.objective);
        ledger.rounds.push(RoundRecord {
            round: round + 1,
            ops: 2 * graph.col_indices().len() as u64 + outcome.ops,
            max_worker_ops: 2 * graph.col_indices().len() as u64 + outcome.ops,
            em_iters: vec![outcome.iterations() as u32],
            objective,
            ascent_violations: ascent_violations(&outcome.trace, ASCENT_TOL) as u32,
            degenerate,
            ..Default::default()
        });
        last_params = Some(params);
        if let Some(prev) = previous {
            if (objective - prev).abs() <= cfg.tol * prev.abs() {
                converged = true;
                break;
            }
        }
    }
    Ok(FitResult {
        labels,
        params: last_params.expect("at least one round"),
        rounds: ledger.rounds.len(),
        ledger,
        converged,
        degenerate_flags,
        initial_labels: init,
        init_collapsed: collapsed,
        trajectory,
    })
}

/// Least-squares line `y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fails with fewer than two points or when every `x` is equal.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return Err(Error::Config("a line needs at least two points".into()));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// One fit's size and per-round cost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub num_nodes: usize,
    pub workers: usize,
    /// Measured edge density.
    pub density: f64,
    pub bits_per_round: f64,
    /// Multiply-adds per worker per round.
    pub ops_per_round: f64,
}

impl ScalingPoint {
    /// Per-round averages of a fit's ledger.
    pub fn from_fit(num_nodes: usize, workers: usize, density: f64, ledger: &RoundLedger) -> Self {
        let rounds = ledger.rounds.len().max(1) as f64;
        let bits: u64 = ledger.rounds.iter().map(|r| r.bits_broadcast + r.bits_gathered).sum();
        Self {
            num_nodes,
            workers,
            density,
            bits_per_round: bits as f64 / rounds,
            ops_per_round: ledger.total_ops() as f64 / rounds / workers as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    /// Bits per round against `N * R`.
    pub bits: LinearFit,
    /// Per-worker multiply-adds per round against `N * n * density`.
    pub ops: LinearFit,
}

pub fn ledger_scaling_report(points: &[ScalingPoint]) -> Result<ScalingReport> {
    if points.len() < 3 {
        return Err(Error::Config("scaling report needs at least three settings".into()));
    }
    let bits: Vec<(f64, f64)> = points
        .iter()
        .map(|p| ((p.num_nodes * p.workers) as f64, p.bits_per_round))
        .collect();
    let ops: Vec<(f64, f64)> = points
        .iter()
        .map(|p| {
            let n = p.num_nodes as f64 / p.workers as f64;
            (p.num_nodes as f64 * n * p.density, p.ops_per_round)
        })
        .collect();
    Ok(ScalingReport {
        bits: linear_fit(&bits)?,
        ops: linear_fit(&ops)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::eight_node_example;
    use crate::partition::shards_for;
    use crate::protocol::label_width;
    use crate::sim::{generate_sbm, make_planted_theta, SbmConfig};

    fn summary(k: usize, blocks: Vec<u64>, nodes: Vec<u64>) -> WorkerSummary {
        WorkerSummary {
            k,
            block_counts: blocks,
            node_counts: nodes,
        }
    }

    #[test]
    fn pi_from_two_workers() {
        let s = [summary(2, vec![4, 1, 1, 2], vec![2, 2]), summary(2, vec![3, 0, 1, 1], vec![3, 1])];
        let (p, degenerate) = aggregate_global_params(&s, 8, Mode::Sbm).unwrap();
        assert!(!degenerate);
        assert_eq!(p.pi, vec![5.0 / 8.0, 3.0 / 8.0]);
        assert_eq!(p.rates.row(0), &[7.0 / 5.0, 1.0 / 5.0]);
        assert_eq!(p.rates.row(1), &[2.0 / 3.0, 3.0 / 3.0]);
        let (q, _) = aggregate_global_params(&s, 8, Mode::Dcsbm).unwrap();
        assert!((q.rates.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((q.rates[(0, 0)] - 7.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn empty_community_uses_mean_row() {
        let s = [summary(3, vec![2, 0, 0, 0, 0, 0, 4, 0, 2], vec![2, 0, 2])];
        let (p, degenerate) = aggregate_global_params(&s, 4, Mode::Sbm).unwrap();
        assert!(degenerate);
        assert_eq!(p.rates.row(1), &[1.5, 0.0, 0.5]);
        let zeros = [summary(2, vec![0; 4], vec![1, 1])];
        let (p, _) = aggregate_global_params(&zeros, 2, Mode::Sbm).unwrap();
        assert_eq!(p.rates, Square::zeros(2));
        let (p, _) = aggregate_global_params(&zeros, 2, Mode::Dcsbm).unwrap();
        assert_eq!(p.rates, Square::filled(2, 0.5));
    }

    #[test]
    fn aggregation_rejects_wrong_totals() {
        let s = [summary(2, vec![0; 4], vec![1, 1])];
        assert!(aggregate_global_params(&s, 3, Mode::Sbm).is_err());
        assert!(aggregate_global_params(&[], 3, Mode::Sbm).is_err());
    }

    #[test]
    fn split_aggregation_matches_whole_graph() {
        let (g, map) = eight_node_example();
        let labels = [0, 0, 0, 1, 0, 1, 1, 1];
        let shards = shards_for(&g, Arc::new(map)).unwrap();
        let parts: Vec<_> = shards.iter().map(|s| worker_summary(s, &labels, 2)).collect();
        let whole = global_summary(&g, &labels, 2);
        assert_eq!(
            aggregate_global_params(&parts, 8, Mode::Sbm).unwrap(),
            aggregate_global_params(&[whole], 8, Mode::Sbm).unwrap()
        );
    }

    fn planted(seed: u64) -> SparseGraph {
        generate_sbm(&SbmConfig {
            num_nodes: 600,
            pi: vec![0.2, 0.3, 0.5],
            theta: make_planted_theta(0.05, 0.8, 3),
            seed,
        })
        .unwrap()
        .graph
    }

    #[test]
    fn single_worker_matches_single_machine() {
        let g = planted(1);
        for mode in [Mode::Sbm, Mode::Dcsbm] {
            let cfg = FitConfig::new(3, 1, 7);
            let a = fit(&g, mode, &cfg).unwrap();
            let b = run_pl_single(&g, mode, &cfg).unwrap();
            assert_eq!(a.trajectory, b.trajectory);
            assert_eq!(a.params, b.params);
        }
    }

    #[test]
    fn broadcast_bits_are_exact() {
        let g = planted(2);
        let cfg = FitConfig::new(3, 4, 3);
        let res = run_dpl(&g, &cfg).unwrap();
        let per_worker = 600 * label_width(3) as u64 + 64 * (3 + 9);
        for r in &res.ledger.rounds {
            assert_eq!(r.bits_broadcast, 4 * per_worker);
            // summaries plus local labels plus one objective per worker
            assert_eq!(r.bits_gathered, 4 * 64 * 12 + 600 * 2 + 4 * 64);
            assert_eq!(r.messages, 16);
            assert_eq!(r.em_iters.len(), 4);
        }
    }

    #[test]
    fn repeatable() {
        let g = planted(3);
        let cfg = FitConfig::new(3, 5, 11);
        let a = run_dpl(&g, &cfg).unwrap();
        let b = run_dpl(&g, &cfg).unwrap();
        assert_eq!(a.trajectory, b.trajectory);
        assert_eq!(a.ledger, b.ledger);
    }

    #[test]
    fn bad_given_labels() {
        let g = planted(4);
        let mut cfg = FitConfig::new(3, 2, 0);
        cfg.init = Some(InitMode::Given(LabelVector::constant(10)));
        assert!(run_dpl(&g, &cfg).is_err());
        cfg.init = Some(InitMode::Given(LabelVector::new(vec![5; 600])));
        assert!(run_dpl(&g, &cfg).is_err());
    }

    #[test]
    fn fit_on_edgeless_graph() {
        let g = SparseGraph::empty(12);
        let res = run_dcpl(&g, &FitConfig::new(2, 3, 0)).unwrap();
        assert_eq!(res.labels.len(), 12);
        assert!(res.init_collapsed);
    }

    #[test]
    fn line_fit() {
        let f = linear_fit(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
    }
}
