use std::time::Instant;

use dpl_core::master::{fit_shards, run_pl_single, FitConfig, FitResult};
use dpl_core::metrics::{nmi, red};
use dpl_core::partition::block_split;
use dpl_core::worker::Mode;
use dpl_core::SparseGraph;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::report::ExperimentReport;
use crate::spec::{ExperimentSpec, GridPoint, Method, Splitting};

/// One fit of one replicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub experiment: String,
    pub point: String,
    pub series: String,
    pub x: f64,
    pub method: Method,
    pub seed: u64,
    pub num_nodes: usize,
    pub workers: usize,
    pub block_size: usize,
    pub k: usize,
    pub nmi: f64,
    pub red: Option<f64>,
    pub rounds: usize,
    pub converged: bool,
    pub init_collapsed: bool,
    pub ascent_violations: usize,
    pub total_bits: u64,
    pub total_ops: u64,
    pub wall_ms: f64,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Size of the replicate pool; `None` uses rayon's default.
    pub threads: Option<usize>,
}

/// Configuration used for `method` at `point` with replicate seed `seed`.
pub fn fit_config(point: &GridPoint, method: Method, seed: u64) -> FitConfig {
    let workers = match method {
        Method::PlOracle | Method::CplOracle => 1,
        Method::Dpl | Method::Dcpl => point.workers,
    };
    let mut cfg = FitConfig::new(point.k(), workers, seed);
    if let Some(r) = point.max_rounds {
        cfg.max_rounds = r;
    }
    cfg
}

/// Fits one method on one drawn graph.
pub fn fit_method(graph: &SparseGraph, point: &GridPoint, method: Method, seed: u64) -> Result<FitResult> {
    let cfg = fit_config(point, method, seed);
    let result = match method {
        Method::PlOracle => run_pl_single(graph, Mode::Sbm, &cfg),
        Method::CplOracle => run_pl_single(graph, Mode::Dcsbm, &cfg),
        Method::Dpl | Method::Dcpl => {
            let mode = if method == Method::Dpl { Mode::Sbm } else { Mode::Dcsbm };
            let (map, mut shards) = block_split(graph, cfg.workers, seed)?;
            if point.splitting == Splitting::WithinBlock {
                shards = shards.iter().map(|s| s.restrict_to_own_block()).collect();
            }
            fit_shards(&map, &shards, mode, &cfg)
        }
    };
    Ok(result?)
}

fn run_replicate(spec: &ExperimentSpec, point: &GridPoint, seed: u64) -> Result<Vec<ReplicateRow>> {
    let net = point.generate(seed)?;
    let mut rows = Vec::with_capacity(spec.methods.len());
    for &method in &spec.methods {
        let workers = fit_config(point, method, seed).workers;
        let start = Instant::now();
        let fit = fit_method(&net.graph, point, method, seed)?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let relative = if spec.red { red(&net.graph, &fit.labels).ok() } else { None };
        rows.push(ReplicateRow {
            experiment: spec.name.clone(),
            point: point.label.clone(),
            series: point.series.clone(),
            x: point.x,
            method,
            seed,
            num_nodes: point.num_nodes,
            workers,
            block_size: point.num_nodes / workers,
            k: point.k(),
            nmi: nmi(&net.truth, &fit.labels)?,
            red: relative,
            rounds: fit.rounds,
            converged: fit.converged,
            init_collapsed: fit.init_collapsed,
            ascent_violations: fit.ledger.ascent_violations() as usize,
            total_bits: fit.ledger.total_bits(),
            total_ops: fit.ledger.total_ops(),
            wall_ms,
        });
    }
    Ok(rows)
}

/// Runs every (grid point, seed) pair; methods share the drawn graph.
/// Rows come back ordered by grid point, then seed, then method.
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<ExperimentReport> {
    spec.validate()?;
    let jobs: Vec<(usize, u64)> = (0..spec.points.len())
        .flat_map(|p| spec.seeds().map(move |s| (p, s)))
        .collect();
    let work = || -> Result<Vec<Vec<ReplicateRow>>> {
        jobs.par_iter()
            .map(|&(p, seed)| run_replicate(spec, &spec.points[p], seed))
            .collect()
    };
    let nested = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| BenchError::Spec(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    Ok(ExperimentReport::new(spec, nested.into_iter().flatten().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentSpec {
        ExperimentSpec::from_toml(
            r#"
name = "tiny"
reps = 2
base_seed = 5
methods = ["dpl", "pl-oracle"]
red = true

[[points]]
label = "a"
x = 1
num_nodes = 120
workers = 3
pi = [0.5, 0.5]
theta = { rho = 0.2, beta = 0.9 }

[[points]]
label = "b"
x = 2
num_nodes = 120
workers = 2
pi = [0.5, 0.5]
theta = { rho = 0.2, beta = 0.9 }
splitting = "within-block"
max_rounds = 1
"#,
        )
        .unwrap()
    }

    #[test]
    fn rows_are_ordered_and_reproducible() {
        let spec = tiny();
        let a = run_experiment(&spec, &RunOptions { threads: Some(2) }).unwrap();
        let keys: Vec<_> = a.rows.iter().map(|r| (r.point.as_str(), r.seed, r.method)).collect();
        assert_eq!(
            keys,
            vec![
                ("a", 5, Method::Dpl),
                ("a", 5, Method::PlOracle),
                ("a", 6, Method::Dpl),
                ("a", 6, Method::PlOracle),
                ("b", 5, Method::Dpl),
                ("b", 5, Method::PlOracle),
                ("b", 6, Method::Dpl),
                ("b", 6, Method::PlOracle),
            ]
        );
        assert!(a.rows.iter().filter(|r| r.point == "b" && r.method == Method::Dpl).all(|r| r.rounds == 1));
        assert!(a.rows.iter().all(|r| r.red.is_some()));
        assert_eq!(a.rows[1].workers, 1);

        let b = run_experiment(&spec, &RunOptions { threads: Some(1) }).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!((x.nmi, x.red, x.total_bits, x.total_ops), (y.nmi, y.red, y.total_bits, y.total_ops));
        }
    }
}
