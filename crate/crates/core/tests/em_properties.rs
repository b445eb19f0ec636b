use dpl_core::matrix::Square;
use dpl_core::worker::{ascent_violations, em_dcsbm, em_sbm, pseudo_loglik, CountStats, EmOptions, Mode, ModelParams};
use proptest::prelude::*;

const FLOOR: f64 = 1e-10;

fn params_strategy(mode: Mode, k: usize) -> impl Strategy<Value = ModelParams> {
    (
        prop::collection::vec(0.05f64..1.0, k),
        prop::collection::vec(0.05f64..6.0, k * k),
    )
        .prop_map(move |(w, r)| {
            let total: f64 = w.iter().sum();
            let mut rates = Square::from_fn(k, |l, m| r[l * k + m]);
            if mode == Mode::Dcsbm {
                for l in 0..k {
                    let s: f64 = rates.row(l).iter().sum();
                    rates.row_mut(l).iter_mut().for_each(|x| *x /= s);
                }
            }
            ModelParams {
                mode,
                pi: w.iter().map(|x| x / total).collect(),
                rates,
            }
        })
}

fn stats_strategy(k: usize) -> impl Strategy<Value = CountStats> {
    prop::collection::vec(prop::collection::vec(0u32..8, k), 1..25).prop_map(move |rows| CountStats::from_rows(k, &rows))
}

fn case(mode: Mode) -> impl Strategy<Value = (CountStats, ModelParams)> {
    (2usize..5).prop_flat_map(move |k| (stats_strategy(k), params_strategy(mode, k)))
}

fn one_e_step() -> EmOptions {
    EmOptions {
        max_iter: 0,
        ..EmOptions::default()
    }
}

/// Posterior weights as plain products, with the same constant dropped.
fn brute_weights(params: &ModelParams, b: &[u32]) -> Vec<f64> {
    let k = params.k();
    (0..k)
        .map(|l| {
            let mut w = params.pi[l];
            for m in 0..k {
                let rate = params.rates[(l, m)];
                w *= rate.powi(b[m] as i32);
                if params.mode == Mode::Sbm {
                    w *= (-rate).exp();
                }
            }
            w
        })
        .collect()
}

fn run(stats: &CountStats, params: &ModelParams, opts: &EmOptions) -> dpl_core::worker::EmOutcome {
    match params.mode {
        Mode::Sbm => em_sbm(stats, params, opts),
        Mode::Dcsbm => em_dcsbm(stats, params, opts),
    }
}

fn permute(stats: &CountStats, params: &ModelParams, sigma: &[usize]) -> (CountStats, ModelParams) {
    let k = params.k();
    let rows: Vec<Vec<u32>> = (0..stats.num_rows())
        .map(|i| (0..k).map(|m| stats.row(i)[sigma[m]]).collect())
        .collect();
    let permuted = ModelParams {
        mode: params.mode,
        pi: (0..k).map(|l| params.pi[sigma[l]]).collect(),
        rates: Square::from_fn(k, |l, m| params.rates[(sigma[l], sigma[m])]),
    };
    (CountStats::from_rows(k, &rows), permuted)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn e_step_matches_direct_products(
        (stats, params) in prop_oneof![case(Mode::Sbm), case(Mode::Dcsbm)],
    ) {
        let out = run(&stats, &params, &one_e_step());
        let mut objective = 0.0;
        for i in 0..stats.num_rows() {
            let w = brute_weights(&params, stats.row(i));
            let total: f64 = w.iter().sum();
            objective += total.ln();
            for (l, x) in w.iter().enumerate() {
                prop_assert!(close(out.tau.row(i)[l], x / total, 1e-9));
            }
        }
        prop_assert!(close(out.objective(), objective, 1e-9));
        prop_assert!(close(pseudo_loglik(&stats, &params, FLOOR), objective, 1e-9));
    }

    #[test]
    fn em_never_goes_downhill(
        (stats, params) in prop_oneof![case(Mode::Sbm), case(Mode::Dcsbm)],
    ) {
        let out = run(&stats, &params, &EmOptions { max_iter: 50, ..EmOptions::default() });
        prop_assert_eq!(ascent_violations(&out.trace, 1e-8), 0);
        let total: f64 = out.params.pi.iter().sum();
        prop_assert!(close(total, 1.0, 1e-12));
        if params.mode == Mode::Dcsbm {
            for l in 0..params.k() {
                let s: f64 = out.params.rates.row(l).iter().sum();
                prop_assert!(close(s, 1.0, 1e-9));
            }
        }
    }

    #[test]
    fn relabelling_communities_relabels_the_fit(
        (stats, params) in prop_oneof![case(Mode::Sbm), case(Mode::Dcsbm)],
        rot in 1usize..4,
    ) {
        let k = params.k();
        let sigma: Vec<usize> = (0..k).map(|l| (l + rot) % k).collect();
        let (stats2, params2) = permute(&stats, &params, &sigma);
        // tol below zero: never stop early on a floating-point tie
        let opts = EmOptions { max_iter: 5, tol: -1.0, ..EmOptions::default() };
        let a = run(&stats, &params, &opts);
        let b = run(&stats2, &params2, &opts);
        prop_assert_eq!(a.trace.len(), b.trace.len());
        for (x, y) in a.trace.iter().zip(&b.trace) {
            prop_assert!(close(*x, *y, 1e-9));
        }
        for i in 0..stats.num_rows() {
            for l in 0..k {
                prop_assert!(close(b.tau.row(i)[l], a.tau.row(i)[sigma[l]], 1e-7));
            }
        }
        for l in 0..k {
            prop_assert!(close(b.params.pi[l], a.params.pi[sigma[l]], 1e-7));
        }
    }
}
