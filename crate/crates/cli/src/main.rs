use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dpl_bench::examples::{
    ablation_specs, example1_specs, example2_specs, example3_specs, run_ablation, run_example1, run_example2,
    run_example3, DEFAULT_REPS, FULL_REPS,
};
use dpl_bench::{ExperimentReport, ExperimentSpec, RunOptions};
use dpl_core::io::{
    load_edge_list, parse_partition, read_label_file, write_edge_list, write_labels, write_partition, LoadedGraph,
    PartitionFile,
};
use dpl_core::master::{fit_shards, FitConfig, InitMode};
use dpl_core::metrics::{nmi, red};
use dpl_core::partition::{block_split, shards_for};
use dpl_core::select::select_k;
use dpl_core::sim::{generate_dcsbm, generate_sbm, make_planted_theta, AlphaSpec, DcsbmConfig, SbmConfig};
use dpl_core::worker::Mode;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "dpl", version, about = "Distributed pseudo-likelihood community detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a planted network; writes an edge list and its true labels.
    Generate(GenerateArgs),
    /// Randomly split nodes into equal blocks; writes a partition file.
    Split(SplitArgs),
    /// Fit communities with the distributed algorithm.
    Fit(FitArgs),
    /// Choose the number of communities by corrected BIC.
    SelectK(SelectArgs),
    /// Score a labelling.
    Eval(EvalArgs),
    /// Run a simulation grid and write CSV tables and SVG figures.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Sbm,
    Dcsbm,
}

impl Model {
    fn mode(self) -> Mode {
        match self {
            Model::Sbm => Mode::Sbm,
            Model::Dcsbm => Mode::Dcsbm,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "sbm")]
    model: Model,
    /// Number of nodes.
    #[arg(long)]
    nodes: usize,
    /// Number of communities.
    #[arg(long)]
    k: usize,
    /// Community proportions, comma separated; uniform when omitted.
    #[arg(long, value_delimiter = ',')]
    pi: Option<Vec<f64>>,
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 0.8)]
    beta: f64,
    /// Degree heterogeneity of the two-point degree model.
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitKind {
    Scp,
    Ssc,
    File,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long, value_enum, default_value = "sbm")]
    model: Model,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    max_rounds: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Initializer; defaults to scp for the sbm and ssc for the dcsbm.
    #[arg(long, value_enum)]
    init: Option<InitKind>,
    /// Label file used by `--init file`.
    #[arg(long)]
    init_labels: Option<PathBuf>,
    /// Use this partition file instead of drawing a split from the seed.
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Fitted labels.
    #[arg(long)]
    out: PathBuf,
    /// Fitted parameters and convergence details, as JSON.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Per-round communication and computation counters, as CSV.
    #[arg(long)]
    ledger: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    edges: PathBuf,
    /// Candidate counts: a range `2..8` (inclusive) or a list `2,3,5`.
    #[arg(long, default_value = "2..8")]
    candidates: String,
    #[arg(long, value_enum, default_value = "sbm")]
    model: Model,
    #[arg(long)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Score table.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricKind {
    Nmi,
    Red,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    metric: MetricKind,
    /// Labels to score.
    #[arg(long)]
    labels: PathBuf,
    /// True labels, for nmi.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Edge list, for red.
    #[arg(long)]
    edges: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Example {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    Ablation,
}

#[derive(Args)]
struct BenchArgs {
    /// Built-in grid.
    #[arg(long, value_enum, conflicts_with = "spec", required_unless_present = "spec")]
    example: Option<Example>,
    /// Experiment spec file (TOML).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Replicates per grid point; overrides the spec file.
    #[arg(long)]
    reps: Option<usize>,
    /// Use 100 replicates per grid point.
    #[arg(long, conflicts_with = "reps")]
    full_reps: bool,
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
    /// Worker threads for replicates.
    #[arg(long)]
    threads: Option<usize>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn load(path: &Path) -> Result<LoadedGraph> {
    load_edge_list(path).with_context(|| format!("reading {}", path.display()))
}

fn generate(a: GenerateArgs) -> Result<()> {
    if a.k == 0 {
        bail!("--k must be positive");
    }
    let pi = a.pi.unwrap_or_else(|| vec![1.0 / a.k as f64; a.k]);
    if pi.len() != a.k {
        bail!("--pi has {} entries but --k is {}", pi.len(), a.k);
    }
    let base = SbmConfig {
        num_nodes: a.nodes,
        pi,
        theta: make_planted_theta(a.rho, a.beta, a.k),
        seed: a.seed,
    };
    let net = match a.model {
        Model::Sbm => generate_sbm(&base)?,
        Model::Dcsbm => generate_dcsbm(&DcsbmConfig {
            base,
            alpha: AlphaSpec::TwoPoint { m: a.m },
        })?,
    };
    write_edge_list(create(&a.edges)?, &net.graph, None)?;
    write_labels(create(&a.labels)?, &net.truth, None)?;
    eprintln!("{} nodes, {} edges", net.graph.num_nodes(), net.graph.num_edges());
    Ok(())
}

fn split(a: SplitArgs) -> Result<()> {
    let loaded = load(&a.edges)?;
    let (map, _) = block_split(&loaded.graph, a.workers, a.seed)?;
    write_partition(create(&a.out)?, &PartitionFile::from_map(&map, a.seed, Some(&loaded.original_ids)))?;
    Ok(())
}

#[derive(Serialize)]
struct FitSummary<'a> {
    model: &'a str,
    k: usize,
    workers: usize,
    seed: u64,
    rounds: usize,
    converged: bool,
    init_collapsed: bool,
    degenerate_flags: &'a [bool],
    pi: &'a [f64],
    /// Row-major K x K block rates (the connectivity matrix for the dcsbm).
    rates: Vec<Vec<f64>>,
}

fn fit_cmd(a: FitArgs) -> Result<()> {
    let loaded = load(&a.edges)?;
    let ids = &loaded.original_ids;
    let mode = a.model.mode();
    let mut cfg = FitConfig::new(a.k, a.workers, a.seed);
    cfg.max_rounds = a.max_rounds;
    cfg.tol = a.tol;
    cfg.init = match (a.init, &a.init_labels) {
        (Some(InitKind::File), Some(path)) => Some(InitMode::Given(read_label_file(path)?.align(ids)?)),
        (Some(InitKind::File), None) => bail!("--init file needs --init-labels"),
        (_, Some(_)) => bail!("--init-labels is only read with --init file"),
        (Some(InitKind::Scp), None) => Some(InitMode::Scp),
        (Some(InitKind::Ssc), None) => Some(InitMode::Ssc),
        (None, None) => None,
    };
    let (map, shards) = match &a.partition {
        Some(path) => {
            let file = parse_partition(std::io::BufReader::new(File::open(path)?))
                .with_context(|| format!("reading {}", path.display()))?;
            if file.workers != a.workers {
                bail!("partition file has {} workers, --workers is {}", file.workers, a.workers);
            }
            let map = Arc::new(file.to_index_map(Some(ids))?);
            let shards = shards_for(&loaded.graph, Arc::clone(&map))?;
            (map, shards)
        }
        None => block_split(&loaded.graph, a.workers, a.seed)?,
    };
    let res = fit_shards(&map, &shards, mode, &cfg)?;
    write_labels(create(&a.out)?, &res.labels, Some(ids))?;
    if let Some(path) = &a.params {
        let k = res.params.k();
        let summary = FitSummary {
            model: if mode == Mode::Sbm { "sbm" } else { "dcsbm" },
            k,
            workers: a.workers,
            seed: a.seed,
            rounds: res.rounds,
            converged: res.converged,
            init_collapsed: res.init_collapsed,
            degenerate_flags: &res.degenerate_flags,
            pi: &res.params.pi,
            rates: (0..k).map(|l| (0..k).map(|c| res.params.rates[(l, c)]).collect()).collect(),
        };
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &summary)?;
        writeln!(w)?;
    }
    if let Some(path) = &a.ledger {
        create(path)?.write_all(res.ledger.to_csv().as_bytes())?;
    }
    eprintln!("{} rounds, converged: {}", res.rounds, res.converged);
    Ok(())
}

fn parse_candidates(text: &str) -> Result<Vec<usize>> {
    let out: Vec<usize> = if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo.trim().parse().context("bad range start")?;
        let hi: usize = hi.trim().trim_start_matches('=').parse().context("bad range end")?;
        (lo..=hi).collect()
    } else {
        text.split(',')
            .map(|t| t.trim().parse().with_context(|| format!("bad candidate {t:?}")))
            .collect::<Result<_>>()?
    };
    if out.is_empty() || out.contains(&0) {
        bail!("candidates must be positive and non-empty");
    }
    Ok(out)
}

#[derive(Serialize)]
struct ScoreRow {
    k: usize,
    loglik: f64,
    penalty: f64,
    score: f64,
    degenerate: bool,
    failed: bool,
}

fn select_cmd(a: SelectArgs) -> Result<()> {
    let loaded = load(&a.edges)?;
    let candidates = parse_candidates(&a.candidates)?;
    let sel = select_k(&loaded.graph, &candidates, a.model.mode(), &FitConfig::new(candidates[0], a.workers, a.seed))?;
    let rows: Vec<ScoreRow> = sel
        .scores
        .iter()
        .map(|s| ScoreRow {
            k: s.k,
            loglik: s.worker_logliks.iter().sum(),
            penalty: s.penalty,
            score: s.score,
            degenerate: s.degenerate,
            failed: s.failed,
        })
        .collect();
    let mut w: csv::Writer<Box<dyn Write>> = csv::Writer::from_writer(match &a.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(std::io::stdout()),
    });
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    eprintln!("selected K = {}", sel.best);
    Ok(())
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let labels = read_label_file(&a.labels)?;
    let value = match a.metric {
        MetricKind::Nmi => {
            let Some(truth) = &a.truth else { bail!("--metric nmi needs --truth") };
            let truth = read_label_file(truth)?;
            let ids = truth.sorted_ids();
            nmi(&truth.align(&ids)?, &labels.align(&ids)?)?
        }
        MetricKind::Red => {
            let Some(edges) = &a.edges else { bail!("--metric red needs --edges") };
            let loaded = load(edges)?;
            red(&loaded.graph, &labels.align(&loaded.original_ids)?)?
        }
    };
    println!("{value}");
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> Result<bool> {
    let reps = if a.full_reps { Some(FULL_REPS) } else { a.reps };
    let opts = RunOptions { threads: a.threads };
    let reports: Vec<ExperimentReport> = match (a.example, &a.spec) {
        (Some(ex), _) => {
            let reps = reps.unwrap_or(DEFAULT_REPS);
            match ex {
                Example::One => run_example1(&example1_specs(reps), &opts)?,
                Example::Two => run_example2(&example2_specs(reps), &opts)?,
                Example::Three => run_example3(&example3_specs(reps), &opts)?,
                Example::Ablation => run_ablation(&ablation_specs(reps), &opts)?,
            }
        }
        (None, Some(path)) => {
            let mut spec = ExperimentSpec::load(path)?;
            if let Some(r) = reps {
                spec.reps = r;
            }
            vec![dpl_bench::run_experiment(&spec, &opts)?]
        }
        (None, None) => bail!("give --example or --spec"),
    };
    let mut ok = true;
    for r in &reports {
        for path in r.write(&a.out)? {
            eprintln!("wrote {}", path.display());
        }
        for s in &r.summary {
            println!(
                "{} {} {}: NMI {:.4} +- {:.4}{}",
                r.name,
                s.point,
                s.method.name(),
                s.mean_nmi,
                s.sd_nmi,
                s.mean_red.map(|v| format!(", RED {v:.4}")).unwrap_or_default()
            );
        }
        for c in &r.checks {
            println!("[{}] {}: {}", if c.passed { "ok" } else { "FAILED" }, c.name, c.detail);
        }
        ok &= r.all_passed();
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a).map(|_| true),
        Command::Split(a) => split(a).map(|_| true),
        Command::Fit(a) => fit_cmd(a).map(|_| true),
        Command::SelectK(a) => select_cmd(a).map(|_| true),
        Command::Eval(a) => eval_cmd(a).map(|_| true),
        Command::Bench(a) => bench_cmd(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
