//! Planted-partition generators for the stochastic block model and its
//! degree-corrected variant.
//!
//! Labels, degree parameters and edges are drawn from three separate ChaCha
//! streams of the same seed, so changing `theta` leaves the labels alone.
//! Edges are sampled per group pair with geometric skipping, which is exact
//! and costs `O(N + |E|)` for a handful of groups.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::labels::LabelVector;
use crate::matrix::Square;

const LABEL_STREAM: u64 = 1;
const ALPHA_STREAM: u64 = 2;
const EDGE_STREAM: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// `rho * ((1 - beta) 11^T + beta I)`: diagonal `rho`, off-diagonal `rho (1 - beta)`.
pub fn make_planted_theta(rho: f64, beta: f64, k: usize) -> Square {
    Square::from_fn(k, |l, c| if l == c { rho } else { rho * (1.0 - beta) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbmConfig {
    pub num_nodes: usize,
    pub pi: Vec<f64>,
    pub theta: Square,
    pub seed: u64,
}

impl SbmConfig {
    pub fn k(&self) -> usize {
        self.pi.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 {
            return Err(Error::Config("pi must be non-empty".into()));
        }
        if self.theta.dim() != k {
            return Err(Error::Config(format!(
                "theta is {0}x{0} but pi has {k} entries",
                self.theta.dim()
            )));
        }
        if self.pi.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::Config("pi entries must be positive".into()));
        }
        let total: f64 = self.pi.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("pi sums to {total}, not 1")));
        }
        if !self.theta.is_symmetric() {
            return Err(Error::Config("theta must be symmetric".into()));
        }
        if self.theta.as_slice().iter().any(|&t| !(0.0..=1.0).contains(&t)) {
            return Err(Error::Config("theta entries must lie in [0, 1]".into()));
        }
        if self.num_nodes > u32::MAX as usize {
            return Err(Error::Config("too many nodes".into()));
        }
        Ok(())
    }

    /// `max_{k != l} theta_kl < min_k theta_kk`.
    pub fn is_assortative(&self) -> bool {
        let k = self.k();
        let min_diag = (0..k).map(|l| self.theta[(l, l)]).fold(f64::INFINITY, f64::min);
        let max_off = (0..k)
            .flat_map(|l| (0..k).filter(move |&c| c != l).map(move |c| (l, c)))
            .map(|idx| self.theta[idx])
            .fold(f64::NEG_INFINITY, f64::max);
        max_off < min_diag
    }
}

/// Degree parameters of a degree-corrected model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSpec {
    /// `alpha = m x` or `x` with probability 1/2 each, `x = 2 / (m + 1)`.
    TwoPoint { m: f64 },
    /// One value per node; must be positive with mean 1.
    Explicit(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcsbmConfig {
    pub base: SbmConfig,
    pub alpha: AlphaSpec,
}

impl DcsbmConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        match &self.alpha {
            AlphaSpec::TwoPoint { m } if !(*m >= 1.0) => {
                Err(Error::Config(format!("heterogeneity level m = {m} must be >= 1")))
            }
            AlphaSpec::Explicit(a) => {
                if a.len() != self.base.num_nodes {
                    return Err(Error::LengthMismatch {
                        expected: self.base.num_nodes,
                        actual: a.len(),
                    });
                }
                if a.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                    return Err(Error::Config("alpha entries must be positive".into()));
                }
                let mean = a.iter().sum::<f64>() / a.len() as f64;
                if (mean - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!("alpha has mean {mean}, not 1")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlantedNetwork {
    pub graph: SparseGraph,
    pub truth: LabelVector,
    /// Degree parameters, present for degree-corrected draws.
    pub alpha: Option<Vec<f64>>,
    /// Node pairs whose Poisson rate reached 1, where the Bernoulli
    /// approximation is poor.
    pub saturated_pairs: u64,
}

fn draw_labels(n: usize, pi: &[f64], seed: u64) -> Vec<u32> {
    let mut rng = stream(seed, LABEL_STREAM);
    let mut cumulative: Vec<f64> = pi
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    *cumulative.last_mut().unwrap() = f64::INFINITY;
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            cumulative.iter().position(|&c| u < c).unwrap() as u32
        })
        .collect()
}

/// Appends every pair of `(a x b)` (or of `a` choose 2 when `same`) that
/// survives an independent coin with success probability `p`.
fn sample_pairs(
    rng: &mut ChaCha8Rng,
    a: &[u32],
    b: &[u32],
    same: bool,
    p: f64,
    out: &mut Vec<(u32, u32)>,
) {
    let total: u64 = if same {
        let m = a.len() as u64;
        m * m.saturating_sub(1) / 2
    } else {
        a.len() as u64 * b.len() as u64
    };
    if total == 0 || p <= 0.0 {
        return;
    }
    let log_q = (-p).ln_1p();
    let width = b.len() as u64;
    // Upper-triangle walk for the same-group case: row `i` spans
    // `row_start .. row_start + (m - 1 - i)`.
    let m = a.len() as u64;
    let mut row = 0u64;
    let mut row_start = 0u64;
    let mut idx: u64 = 0;
    let mut first = true;
    loop {
        let step = if p >= 1.0 {
            1
        } else {
            let u: f64 = 1.0 - rng.random::<f64>();
            let skip = (u.ln() / log_q).floor();
            if skip >= total as f64 {
                return;
            }
            skip as u64 + 1
        };
        idx = if first { step - 1 } else { idx.saturating_add(step) };
        first = false;
        if idx >= total {
            return;
        }
        if same {
            while idx >= row_start + (m - 1 - row) {
                row_start += m - 1 - row;
                row += 1;
            }
            let col = row + 1 + (idx - row_start);
            out.push((a[row as usize], a[col as usize]));
        } else {
            out.push((a[(idx / width) as usize], b[(idx % width) as usize]));
        }
    }
}

/// Samples edges for nodes grouped so that every pair of groups shares one
/// edge probability.
fn sample_grouped(
    num_nodes: usize,
    groups: &[Vec<u32>],
    prob: impl Fn(usize, usize) -> f64,
    seed: u64,
) -> SparseGraph {
    let mut rng = stream(seed, EDGE_STREAM);
    let mut edges = Vec::new();
    for g in 0..groups.len() {
        for h in g..groups.len() {
            sample_pairs(&mut rng, &groups[g], &groups[h], g == h, prob(g, h), &mut edges);
        }
    }
    SparseGraph::from_edges(num_nodes, edges).0
}

/// The planted labels [`generate_sbm`] and [`generate_dcsbm`] draw for
/// `seed`, without sampling any edges.
pub fn planted_labels(num_nodes: usize, pi: &[f64], seed: u64) -> LabelVector {
    LabelVector::new(draw_labels(num_nodes, pi, seed))
}

/// Draws labels i.i.d. from `pi`, then each unordered pair `i < j` is an edge
/// with probability `theta[z_i][z_j]`.
pub fn generate_sbm(cfg: &SbmConfig) -> Result<PlantedNetwork> {
    cfg.validate()?;
    let labels = draw_labels(cfg.num_nodes, &cfg.pi, cfg.seed);
    let mut groups = vec![Vec::new(); cfg.k()];
    for (i, &l) in labels.iter().enumerate() {
        groups[l as usize].push(i as u32);
    }
    let graph = sample_grouped(cfg.num_nodes, &groups, |g, h| cfg.theta[(g, h)], cfg.seed);
    Ok(PlantedNetwork {
        graph,
        truth: LabelVector::new(labels),
        alpha: None,
        saturated_pairs: 0,
    })
}

fn draw_alpha(spec: &AlphaSpec, n: usize, seed: u64) -> Vec<f64> {
    match spec {
        AlphaSpec::TwoPoint { m } => {
            let x = 2.0 / (m + 1.0);
            let mut rng = stream(seed, ALPHA_STREAM);
            (0..n)
                .map(|_| if rng.random::<bool>() { m * x } else { x })
                .collect()
        }
        AlphaSpec::Explicit(a) => a.clone(),
    }
}

/// Degree-corrected draw: the edge indicator of `i < j` is
/// `1{Poisson(alpha_i theta alpha_j) >= 1}`, i.e. Bernoulli with probability
/// `1 - exp(-rate)`.
pub fn generate_dcsbm(cfg: &DcsbmConfig) -> Result<PlantedNetwork> {
    cfg.validate()?;
    let base = &cfg.base;
    let labels = draw_labels(base.num_nodes, &base.pi, base.seed);
    let alpha = draw_alpha(&cfg.alpha, base.num_nodes, base.seed);

    // Group nodes by (label, alpha value); two-point laws give 2K groups.
    let mut order: Vec<u32> = (0..base.num_nodes as u32).collect();
    order.sort_by(|&i, &j| {
        let (i, j) = (i as usize, j as usize);
        labels[i]
            .cmp(&labels[j])
            .then(alpha[i].total_cmp(&alpha[j]))
            .then(i.cmp(&j))
    });
    let mut groups: Vec<Vec<u32>> = Vec::new();
    let mut keys: Vec<(u32, f64)> = Vec::new();
    for &i in &order {
        let key = (labels[i as usize], alpha[i as usize]);
        if keys.last() != Some(&key) {
            keys.push(key);
            groups.push(Vec::new());
        }
        groups.last_mut().unwrap().push(i);
    }

    let rate = |g: usize, h: usize| {
        let (lg, ag) = keys[g];
        let (lh, ah) = keys[h];
        ag * base.theta[(lg as usize, lh as usize)] * ah
    };
    let mut saturated_pairs = 0u64;
    for g in 0..groups.len() {
        for h in g..groups.len() {
            if rate(g, h) >= 1.0 {
                let (a, b) = (groups[g].len() as u64, groups[h].len() as u64);
                saturated_pairs += if g == h { a * a.saturating_sub(1) / 2 } else { a * b };
            }
        }
    }
    if saturated_pairs > 0 {
        log::warn!("{saturated_pairs} node pairs have Poisson rate >= 1");
    }

    let graph = sample_grouped(
        base.num_nodes,
        &groups,
        |g, h| -(-rate(g, h)).exp_m1(),
        base.seed,
    );
    Ok(PlantedNetwork {
        graph,
        truth: LabelVector::new(labels),
        alpha: Some(alpha),
        saturated_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1(seed: u64) -> SbmConfig {
        SbmConfig {
            num_nodes: 2_000,
            pi: vec![0.2, 0.3, 0.5],
            theta: make_planted_theta(5e-3, 0.8, 3),
            seed,
        }
    }

    #[test]
    fn planted_theta_values() {
        let t = make_planted_theta(5e-3, 0.8, 3);
        for l in 0..3 {
            for c in 0..3 {
                let want = if l == c { 0.005 } else { 0.001 };
                assert!((t[(l, c)] - want).abs() < 1e-15);
            }
        }
        assert!(make_planted_theta(0.3, 0.0, 3).as_slice().iter().all(|&x| x == 0.3));
        let diag = make_planted_theta(0.3, 1.0, 2);
        assert_eq!(diag.as_slice(), &[0.3, 0.0, 0.0, 0.3]);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut cfg = example1(0);
        cfg.pi = vec![0.5, 0.5, 0.5];
        assert!(generate_sbm(&cfg).is_err());
        let mut cfg = example1(0);
        cfg.pi = vec![0.0, 0.5, 0.5];
        assert!(generate_sbm(&cfg).is_err());
        let mut cfg = example1(0);
        cfg.theta[(0, 1)] = 0.3;
        assert!(generate_sbm(&cfg).is_err());
        assert!(example1(0).is_assortative());
    }

    #[test]
    fn same_seed_same_graph() {
        let a = generate_sbm(&example1(7)).unwrap();
        let b = generate_sbm(&example1(7)).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.truth, b.truth);
        let c = generate_sbm(&example1(8)).unwrap();
        assert_ne!(a.graph, c.graph);
        a.graph.check_invariants().unwrap();
    }

    #[test]
    fn labels_do_not_depend_on_theta() {
        let a = generate_sbm(&example1(3)).unwrap();
        let mut cfg = example1(3);
        cfg.theta = make_planted_theta(1e-2, 0.5, 3);
        let b = generate_sbm(&cfg).unwrap();
        assert_eq!(a.truth, b.truth);
        assert_eq!(planted_labels(cfg.num_nodes, &cfg.pi, 3), a.truth);
    }

    #[test]
    fn full_probability_gives_complete_blocks() {
        let cfg = SbmConfig {
            num_nodes: 30,
            pi: vec![0.5, 0.5],
            theta: make_planted_theta(1.0, 1.0, 2),
            seed: 1,
        };
        let net = generate_sbm(&cfg).unwrap();
        let sizes = net.truth.counts(2);
        let within: u64 = sizes.iter().map(|&s| s * (s - 1) / 2).sum();
        assert_eq!(net.graph.num_edges() as u64, within);
        for (u, v) in net.graph.edges() {
            assert_eq!(net.truth[u as usize], net.truth[v as usize]);
        }
    }

    #[test]
    fn erdos_renyi_density_concentrates() {
        let p = 0.01;
        let n = 3_000usize;
        let cfg = SbmConfig {
            num_nodes: n,
            pi: vec![1.0],
            theta: Square::filled(1, p),
            seed: 11,
        };
        let g = generate_sbm(&cfg).unwrap().graph;
        let pairs = (n * (n - 1) / 2) as f64;
        let sd = (pairs * p * (1.0 - p)).sqrt();
        assert!((g.num_edges() as f64 - pairs * p).abs() < 3.0 * sd);
    }

    #[test]
    fn two_point_alpha_has_unit_mean() {
        let n = 20_000;
        let a = draw_alpha(&AlphaSpec::TwoPoint { m: 10.0 }, n, 5);
        let mean = a.iter().sum::<f64>() / n as f64;
        let x = 2.0 / 11.0;
        // sd of a single draw is (m x - x) / 2
        let sd = (10.0 * x - x) / 2.0 / (n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * sd, "mean {mean}");
    }

    #[test]
    fn unit_alpha_matches_poissonized_sbm() {
        let base = SbmConfig {
            num_nodes: 3_000,
            pi: vec![1.0],
            theta: Square::filled(1, 0.01),
            seed: 4,
        };
        let net = generate_dcsbm(&DcsbmConfig {
            base: base.clone(),
            alpha: AlphaSpec::TwoPoint { m: 1.0 },
        })
        .unwrap();
        assert!(net.alpha.as_ref().unwrap().iter().all(|&a| a == 1.0));
        let p = -(-0.01f64).exp_m1();
        let pairs = (3_000 * 2_999 / 2) as f64;
        let sd = (pairs * p * (1.0 - p)).sqrt();
        assert!((net.graph.num_edges() as f64 - pairs * p).abs() < 4.0 * sd);
        assert_eq!(net.truth, generate_sbm(&base).unwrap().truth);
    }

    #[test]
    fn explicit_alpha_must_average_one() {
        let base = SbmConfig {
            num_nodes: 4,
            pi: vec![1.0],
            theta: Square::filled(1, 0.5),
            seed: 0,
        };
        let bad = DcsbmConfig {
            base: base.clone(),
            alpha: AlphaSpec::Explicit(vec![1.0, 1.0, 1.0, 2.0]),
        };
        assert!(generate_dcsbm(&bad).is_err());
        let good = DcsbmConfig {
            base,
            alpha: AlphaSpec::Explicit(vec![0.5, 1.5, 1.0, 1.0]),
        };
        generate_dcsbm(&good).unwrap().graph.check_invariants().unwrap();
    }

    #[test]
    fn saturated_rates_are_counted() {
        let cfg = DcsbmConfig {
            base: SbmConfig {
                num_nodes: 4,
                pi: vec![1.0],
                theta: Square::filled(1, 0.9),
                seed: 0,
            },
            alpha: AlphaSpec::Explicit(vec![0.5, 0.5, 1.5, 1.5]),
        };
        // only the (1.5, 1.5) pair reaches 0.9 * 2.25 >= 1
        assert_eq!(generate_dcsbm(&cfg).unwrap().saturated_pairs, 1);
    }
}
