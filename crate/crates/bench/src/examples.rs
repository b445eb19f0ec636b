//! The simulation grids of the three examples and the ablation, with the
//! direction checks each one is expected to show.

use crate::error::Result;
use crate::report::{ExperimentReport, Metric};
use crate::run::{run_experiment, RunOptions};
use crate::spec::{ExperimentSpec, GridPoint, Method, Splitting, ThetaSpec};

pub const DEFAULT_REPS: usize = 20;
pub const FULL_REPS: usize = 100;

const PI_EX12: [f64; 3] = [0.2, 0.3, 0.5];

fn point(label: String, series: &str, x: f64, num_nodes: usize, block: usize, pi: &[f64], theta: ThetaSpec) -> GridPoint {
    GridPoint {
        label,
        series: series.into(),
        x,
        num_nodes,
        workers: num_nodes / block,
        pi: pi.to_vec(),
        theta,
        heterogeneity: None,
        max_rounds: None,
        splitting: Splitting::BlockWise,
    }
}

fn spec(name: &str, reps: usize, methods: Vec<Method>, points: Vec<GridPoint>) -> ExperimentSpec {
    ExperimentSpec {
        name: name.into(),
        reps,
        base_seed: 0,
        methods,
        red: false,
        out_dir: None,
        points,
    }
}

/// Example 1: worker size sweep at N = 10,000 (case 1) and network size
/// sweep at n = 200 (case 2).
pub fn example1_specs(reps: usize) -> Vec<ExperimentSpec> {
    let theta1 = ThetaSpec::Planted { rho: 5e-3, beta: 0.8 };
    let case1 = [100, 200, 500, 1000]
        .into_iter()
        .map(|n| point(format!("n={n}"), "case1", n as f64, 10_000, n, &PI_EX12, theta1.clone()))
        .collect();
    let theta2 = ThetaSpec::Planted { rho: 3e-3, beta: 0.8 };
    let case2 = [2_000, 5_000, 10_000, 20_000, 30_000]
        .into_iter()
        .map(|n_total| point(format!("N={n_total}"), "case2", n_total as f64, n_total, 200, &PI_EX12, theta2.clone()))
        .collect();
    vec![
        spec("example1_case1", reps, vec![Method::Dpl], case1),
        spec("example1_case2", reps, vec![Method::Dpl, Method::PlOracle], case2),
    ]
}

/// Example 2: density sweep at beta = 0.8 and divergence sweep at rho = 0.01,
/// both with N = 10,000 and n = 500.
pub fn example2_specs(reps: usize) -> Vec<ExperimentSpec> {
    let case1 = [0.001, 0.0025, 0.005, 0.0075, 0.01]
        .into_iter()
        .map(|rho| point(format!("rho={rho}"), "case1", rho, 10_000, 500, &PI_EX12, ThetaSpec::Planted { rho, beta: 0.8 }))
        .collect();
    let case2 = [0.1, 0.3, 0.5, 0.7, 0.9]
        .into_iter()
        .map(|beta| point(format!("beta={beta}"), "case2", beta, 10_000, 500, &PI_EX12, ThetaSpec::Planted { rho: 0.01, beta }))
        .collect();
    vec![
        spec("example2_case1", reps, vec![Method::Dpl, Method::PlOracle], case1),
        spec("example2_case2", reps, vec![Method::Dpl, Method::PlOracle], case2),
    ]
}

/// `3e-3 (11^T + diag(2, 3, 4))`.
pub fn example3_theta() -> ThetaSpec {
    let rows = (0..3)
        .map(|l| (0..3).map(|c| 3e-3 * (1.0 + if l == c { [2.0, 3.0, 4.0][l] } else { 0.0 })).collect())
        .collect();
    ThetaSpec::Matrix(rows)
}

/// Example 3: degree heterogeneity sweep for balanced and imbalanced
/// community sizes; `m = 1` is added as the point where the models coincide.
pub fn example3_specs(reps: usize) -> Vec<ExperimentSpec> {
    let mut points = Vec::new();
    for (series, pi) in [("balanced", [0.3, 0.3, 0.4]), ("imbalanced", [0.1, 0.2, 0.7])] {
        for m in [1.0, 2.0, 4.0, 6.0, 8.0, 10.0] {
            let mut p = point(format!("{series} m={m}"), series, m, 10_000, 500, &pi, example3_theta());
            p.heterogeneity = Some(m);
            points.push(p);
        }
    }
    vec![spec("example3", reps, vec![Method::Dpl, Method::Dcpl], points)]
}

/// The 2x2 ablation on a planted DCSBM: block-wise against within-block
/// splitting, one round against up to ten, at two worker sizes.
pub fn ablation_specs(reps: usize) -> Vec<ExperimentSpec> {
    let mut points = Vec::new();
    for (split_name, splitting) in [("block-wise", Splitting::BlockWise), ("within-block", Splitting::WithinBlock)] {
        for (round_name, rounds) in [("one-shot", 1), ("multi-round", 10)] {
            for n in [1000, 3000] {
                let series = format!("{split_name} {round_name}");
                let mut p = point(format!("{series} n={n}"), &series, n as f64, 12_000, n, &[0.3, 0.3, 0.4], example3_theta());
                p.heterogeneity = Some(4.0);
                p.splitting = splitting;
                p.max_rounds = Some(rounds);
                points.push(p);
            }
        }
    }
    let mut s = spec("ablation", reps, vec![Method::Dcpl], points);
    s.red = true;
    vec![s]
}

pub fn run_example1(specs: &[ExperimentSpec], opts: &RunOptions) -> Result<Vec<ExperimentReport>> {
    specs
        .iter()
        .map(|s| {
            let mut r = run_experiment(s, opts)?;
            for series in r.series() {
                r.check_trend(&format!("{series}: dpl NMI non-decreasing within 1 sd"), &series, Method::Dpl);
            }
            Ok(r)
        })
        .collect()
}

pub fn run_example2(specs: &[ExperimentSpec], opts: &RunOptions) -> Result<Vec<ExperimentReport>> {
    specs
        .iter()
        .map(|s| {
            let mut r = run_experiment(s, opts)?;
            for series in r.series() {
                r.check_trend(&format!("{series}: dpl NMI non-decreasing within 1 sd"), &series, Method::Dpl);
            }
            if r.summary_for("beta=0.9", Method::Dpl).is_some() {
                r.check_order("dpl NMI at beta=0.9 exceeds beta=0.3 by 0.2", Metric::Nmi, ("beta=0.9", Method::Dpl), ("beta=0.3", Method::Dpl), 0.2);
            }
            Ok(r)
        })
        .collect()
}

pub fn run_example3(specs: &[ExperimentSpec], opts: &RunOptions) -> Result<Vec<ExperimentReport>> {
    specs
        .iter()
        .map(|s| {
            let mut r = run_experiment(s, opts)?;
            for series in ["balanced", "imbalanced"] {
                let top = format!("{series} m=10");
                if r.summary_for(&top, Method::Dcpl).is_some() {
                    r.check_order(&format!("{series}: dcpl NMI >= dpl NMI at m=10"), Metric::Nmi, (&top, Method::Dcpl), (&top, Method::Dpl), 0.0);
                }
                let one = format!("{series} m=1");
                if let (Some(a), Some(b)) = (r.summary_for(&one, Method::Dcpl), r.summary_for(&one, Method::Dpl)) {
                    let gap = (a.mean_nmi - b.mean_nmi).abs();
                    r.checks.push(crate::report::Check {
                        name: format!("{series}: dcpl and dpl agree within 0.02 at m=1"),
                        passed: gap <= 0.02,
                        detail: format!("{:.4} vs {:.4}", a.mean_nmi, b.mean_nmi),
                    });
                }
            }
            Ok(r)
        })
        .collect()
}

pub fn run_ablation(specs: &[ExperimentSpec], opts: &RunOptions) -> Result<Vec<ExperimentReport>> {
    specs
        .iter()
        .map(|s| {
            let mut r = run_experiment(s, opts)?;
            for n in [1000, 3000] {
                for split in ["block-wise", "within-block"] {
                    let multi = format!("{split} multi-round n={n}");
                    let one = format!("{split} one-shot n={n}");
                    if r.summary_for(&multi, Method::Dcpl).is_some() {
                        r.check_order(&format!("{split} n={n}: multi-round RED <= one-shot"), Metric::Red, (&multi, Method::Dcpl), (&one, Method::Dcpl), 0.0);
                    }
                }
                let block = format!("block-wise multi-round n={n}");
                let within = format!("within-block multi-round n={n}");
                if r.summary_for(&block, Method::Dcpl).is_some() {
                    r.check_order(&format!("n={n}: block-wise RED <= within-block"), Metric::Red, (&block, Method::Dcpl), (&within, Method::Dcpl), 0.0);
                }
            }
            Ok(r)
        })
        .collect()
}
