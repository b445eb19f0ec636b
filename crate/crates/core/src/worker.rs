//! Per-worker computation: count statistics, the inner EM on the pseudo
//! log-likelihood (Poisson rows for the SBM, multinomial rows conditioned on
//! degree for the DCSBM), and the argmax label update.
//!
//! Everything runs in log space. Rates are floored at [`EmOptions::floor`]
//! before taking logs, and the reported objectives drop the `log b!` terms,
//! so they are only comparable within one run.

use serde::{Deserialize, Serialize};

use crate::labels::LabelVector;
use crate::matrix::Square;
use crate::partition::WorkerShard;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Poisson rates `Lambda`, unconditional pseudo-likelihood.
    Sbm,
    /// Row-stochastic `Psi`, likelihood conditioned on node degree.
    Dcsbm,
}

/// Global parameter estimate: mixing proportions and either `Lambda` or `Psi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mode: Mode,
    pub pi: Vec<f64>,
    /// `Lambda` in SBM mode, `Psi` in DCSBM mode.
    pub rates: Square,
}

impl ModelParams {
    pub fn k(&self) -> usize {
        self.pi.len()
    }

    /// Uniform `pi` with every rate equal to `rate`.
    pub fn uniform(mode: Mode, k: usize, rate: f64) -> Self {
        Self {
            mode,
            pi: vec![1.0 / k as f64; k],
            rates: Square::filled(k, rate),
        }
    }
}

/// `b[i'][k]`: edges from in-worker node `i'` to nodes currently labelled `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountStats {
    k: usize,
    counts: Vec<u32>,
    degrees: Vec<u32>,
}

impl CountStats {
    pub fn from_rows(k: usize, rows: &[Vec<u32>]) -> Self {
        let counts: Vec<u32> = rows.iter().flatten().copied().collect();
        assert_eq!(counts.len(), rows.len() * k);
        let degrees = rows.iter().map(|r| r.iter().sum()).collect();
        Self { k, counts, degrees }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_rows(&self) -> usize {
        self.degrees.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u32] {
        &self.counts[i * self.k..(i + 1) * self.k]
    }

    pub fn degree(&self, i: usize) -> u32 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }
}

/// Count statistics of a shard against global labels `0..k`.
pub fn count_stats(shard: &WorkerShard, labels: &[u32], k: usize) -> CountStats {
    let n = shard.num_rows();
    let mut counts = vec![0u32; n * k];
    let mut degrees = vec![0u32; n];
    for i in 0..n {
        let row = &mut counts[i * k..(i + 1) * k];
        for &j in shard.row(i) {
            row[labels[j as usize] as usize] += 1;
        }
        degrees[i] = shard.row(i).len() as u32;
    }
    CountStats { k, counts, degrees }
}

/// Posterior label probabilities, one row per in-worker node.
#[derive(Clone, Debug, PartialEq)]
pub struct Responsibilities {
    k: usize,
    tau: Vec<f64>,
}

impl Responsibilities {
    pub fn from_rows(k: usize, rows: &[Vec<f64>]) -> Self {
        let tau: Vec<f64> = rows.iter().flatten().copied().collect();
        assert_eq!(tau.len(), rows.len() * k);
        Self { k, tau }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_rows(&self) -> usize {
        if self.k == 0 {
            0
        } else {
            self.tau.len() / self.k
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.tau[i * self.k..(i + 1) * self.k]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmOptions {
    /// Stop once the objective moves by less than `tol` relative.
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest value a rate or proportion may take inside a logarithm.
    pub floor: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 100,
            floor: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EmOutcome {
    pub params: ModelParams,
    /// Responsibilities from the last E-step, computed under `params`.
    pub tau: Responsibilities,
    /// Objective after every E-step, in order.
    pub trace: Vec<f64>,
    pub converged: bool,
    /// Some community lost all its mass and had its rate row frozen.
    pub degenerate: bool,
    /// Multiply-adds spent in E- and M-steps.
    pub ops: u64,
}

impl EmOutcome {
    pub fn objective(&self) -> f64 {
        *self.trace.last().expect("EM runs at least one E-step")
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Steps where the objective fell by more than `rel_tol` relative.
pub fn ascent_violations(trace: &[f64], rel_tol: f64) -> usize {
    trace
        .windows(2)
        .filter(|w| w[1] < w[0] - rel_tol * w[0].abs())
        .count()
}

fn log_floor(x: f64, floor: f64) -> f64 {
    x.max(floor).ln()
}

/// Per-community log weight for one row, without the normalizer.
fn log_weights(params: &ModelParams, log_pi: &[f64], log_rates: &Square, row_sums: &[f64], b: &[u32], out: &mut [f64]) {
    let k = params.k();
    for l in 0..k {
        let lr = log_rates.row(l);
        let mut acc = log_pi[l];
        for m in 0..k {
            if b[m] != 0 {
                acc += b[m] as f64 * lr[m];
            }
        }
        if params.mode == Mode::Sbm {
            acc -= row_sums[l];
        }
        out[l] = acc;
    }
}

/// E-step. Returns the responsibilities and the objective at `params`.
fn e_step(stats: &CountStats, params: &ModelParams, floor: f64) -> (Responsibilities, f64) {
    let k = params.k();
    let n = stats.num_rows();
    let log_pi: Vec<f64> = params.pi.iter().map(|&p| log_floor(p, floor)).collect();
    let log_rates = Square::from_fn(k, |l, m| log_floor(params.rates[(l, m)], floor));
    let row_sums: Vec<f64> = (0..k)
        .map(|l| params.rates.row(l).iter().map(|&x| x.max(floor)).sum())
        .collect();

    let mut tau = vec![0.0; n * k];
    let mut objective = 0.0;
    for i in 0..n {
        let out = &mut tau[i * k..(i + 1) * k];
        log_weights(params, &log_pi, &log_rates, &row_sums, stats.row(i), out);
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in out.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in out.iter_mut() {
            *v /= total;
        }
        objective += max + total.ln();
    }
    (Responsibilities { k, tau }, objective)
}

/// M-step. Returns the new parameters and whether any row was frozen.
fn m_step(
    stats: &CountStats,
    tau: &Responsibilities,
    prev: &ModelParams,
    floor: f64,
) -> (ModelParams, bool) {
    let k = prev.k();
    let n = stats.num_rows();
    let mut mass = vec![0.0; k];
    let mut weighted_degree = vec![0.0; k];
    let mut numer = Square::zeros(k);
    for i in 0..n {
        let t = tau.row(i);
        let b = stats.row(i);
        let d = stats.degree(i) as f64;
        for l in 0..k {
            mass[l] += t[l];
            weighted_degree[l] += t[l] * d;
            let row = numer.row_mut(l);
            for m in 0..k {
                if b[m] != 0 {
                    row[m] += t[l] * b[m] as f64;
                }
            }
        }
    }

    let total_mass: f64 = mass.iter().sum();
    let pi: Vec<f64> = mass.iter().map(|&m| m / total_mass).collect();
    let mut rates = Square::zeros(k);
    let mut degenerate = false;
    for l in 0..k {
        let denom = match prev.mode {
            Mode::Sbm => mass[l],
            Mode::Dcsbm => weighted_degree[l],
        };
        let frozen = mass[l] < floor * n as f64 || !(denom > 0.0);
        if frozen {
            degenerate = true;
            rates.row_mut(l).copy_from_slice(prev.rates.row(l));
            continue;
        }
        let row = rates.row_mut(l);
        for m in 0..k {
            row[m] = numer[(l, m)] / denom;
        }
        if prev.mode == Mode::Dcsbm {
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                row.iter_mut().for_each(|x| *x /= s);
            }
        }
    }
    (
        ModelParams {
            mode: prev.mode,
            pi,
            rates,
        },
        degenerate,
    )
}

/// Multiply-adds of one E- or M-step: `K` per non-zero count plus `K` per row.
fn step_ops(n: usize, k: usize, nonzero: usize) -> u64 {
    (k * nonzero + n * k) as u64
}

fn run_em(stats: &CountStats, init: &ModelParams, opts: &EmOptions) -> EmOutcome {
    assert_eq!(stats.k(), init.k(), "count statistics and parameters disagree on K");
    let n = stats.num_rows();
    let k = init.k();
    let mut params = init.clone();
    let mut trace = Vec::new();
    let mut degenerate = false;
    let mut converged = false;
    let mut ops = 0u64;
    let nonzero = stats.counts.iter().filter(|&&c| c != 0).count();
    loop {
        let (tau, objective) = e_step(stats, &params, opts.floor);
        ops += step_ops(n, k, nonzero);
        if let Some(&prev) = trace.last() {
            let prev: f64 = prev;
            converged = (objective - prev).abs() <= opts.tol * prev.abs();
        }
        trace.push(objective);
        if converged || trace.len() > opts.max_iter {
            return EmOutcome {
                params,
                tau,
                trace,
                converged,
                degenerate,
                ops,
            };
        }
        let (next, frozen) = m_step(stats, &tau, &params, opts.floor);
        ops += step_ops(n, k, nonzero);
        degenerate |= frozen;
        params = next;
    }
}

/// EM on the Poisson pseudo log-likelihood, started from `init`.
pub fn em_sbm(stats: &CountStats, init: &ModelParams, opts: &EmOptions) -> EmOutcome {
    assert_eq!(init.mode, Mode::Sbm);
    run_em(stats, init, opts)
}

/// EM on the degree-conditional (multinomial) pseudo log-likelihood.
pub fn em_dcsbm(stats: &CountStats, init: &ModelParams, opts: &EmOptions) -> EmOutcome {
    assert_eq!(init.mode, Mode::Dcsbm);
    run_em(stats, init, opts)
}

/// Pseudo log-likelihood of `stats` under `params` (no EM step taken).
pub fn pseudo_loglik(stats: &CountStats, params: &ModelParams, floor: f64) -> f64 {
    e_step(stats, params, floor).1
}

/// Most likely label per row; ties go to the smallest label.
pub fn local_label_update(tau: &Responsibilities) -> LabelVector {
    (0..tau.num_rows())
        .map(|i| {
            let row = tau.row(i);
            let mut best = 0;
            for l in 1..row.len() {
                if row[l] > row[best] {
                    best = l;
                }
            }
            best as u32
        })
        .collect()
}

/// Block-edge counts and community sizes of one shard.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkerSummary {
    pub k: usize,
    /// `O_r[l][k]`: endpoints from in-worker nodes labelled `l` to nodes labelled `k`.
    pub block_counts: Vec<u64>,
    /// `n_r[l]`: in-worker nodes labelled `l`.
    pub node_counts: Vec<u64>,
}

impl WorkerSummary {
    pub fn block(&self, l: usize, c: usize) -> u64 {
        self.block_counts[l * self.k + c]
    }
}

/// `O_r` and `n_r` from the global labels.
pub fn worker_summary(shard: &WorkerShard, labels: &[u32], k: usize) -> WorkerSummary {
    let mut block_counts = vec![0u64; k * k];
    let mut node_counts = vec![0u64; k];
    for (i, &node) in shard.members().iter().enumerate() {
        let l = labels[node as usize] as usize;
        node_counts[l] += 1;
        let row = &mut block_counts[l * k..(l + 1) * k];
        for &j in shard.row(i) {
            row[labels[j as usize] as usize] += 1;
        }
    }
    WorkerSummary {
        k,
        block_counts,
        node_counts,
    }
}
