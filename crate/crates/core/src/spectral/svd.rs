use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::SpectralOptions;

pub(crate) struct TopEigen {
    /// `dim x k`, columns ordered by decreasing eigenvalue.
    pub vectors: DMatrix<f64>,
    /// All Ritz values of the final subspace, decreasing; the first `k`
    /// belong to `vectors`.
    pub values: Vec<f64>,
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Rayleigh-Ritz step: eigenpairs of `Q^T G Q` lifted back through `Q`.
/// Returns the top `k` vectors and every Ritz value.
fn ritz(q: &DMatrix<f64>, gq: &DMatrix<f64>, k: usize) -> (DMatrix<f64>, Vec<f64>) {
    let mut small = q.transpose() * gq;
    small = (&small + small.transpose()) * 0.5;
    let eig = SymmetricEigen::new(small);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    order.truncate(k);
    let mut vectors = DMatrix::zeros(q.nrows(), order.len());
    for (c, &i) in order.iter().enumerate() {
        vectors.set_column(c, &(q * eig.eigenvectors.column(i)));
    }
    (vectors, values)
}

/// Leading eigenpairs of a symmetric positive semi-definite operator on
/// `R^dim`, by randomized subspace iteration. Convergence is judged on the
/// first `watch` Ritz values.
pub(crate) fn top_eigenvectors(
    apply: impl Fn(&DMatrix<f64>) -> DMatrix<f64>,
    dim: usize,
    k: usize,
    watch: usize,
    opts: &SpectralOptions,
    rng: &mut impl Rng,
) -> TopEigen {
    let width = (k + opts.oversample).min(dim);
    if width == 0 {
        return TopEigen {
            vectors: DMatrix::zeros(dim, 0),
            values: Vec::new(),
        };
    }
    let omega = DMatrix::from_fn(dim, width, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut q = orthonormalize(apply(&omega));
    let mut previous: Option<Vec<f64>> = None;
    let mut iter = 0;
    loop {
        let gq = apply(&q);
        let (vectors, values) = ritz(&q, &gq, k);
        let settled = previous.as_ref().is_some_and(|p| {
            p.iter()
                .zip(&values)
                .take(watch)
                .all(|(a, b)| (a - b).abs() <= opts.tol * b.abs().max(f64::MIN_POSITIVE))
        });
        if iter >= opts.max_power_iters || (iter >= opts.power_iters && settled) {
            return TopEigen { vectors, values };
        }
        previous = Some(values);
        q = orthonormalize(gq);
        iter += 1;
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn matches_dense_eigen() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = DMatrix::from_fn(40, 25, |_, _| rng.random::<f64>());
        let g = &b * b.transpose();
        let mut expected: Vec<f64> = g.clone().symmetric_eigenvalues().iter().copied().collect();
        expected.sort_by(|a, b| b.total_cmp(a));

        let got = top_eigenvectors(|x| &g * x, 40, 3, 3, &SpectralOptions::default(), &mut rng);
        for c in 0..3 {
            assert!((got.values[c] - expected[c]).abs() < 1e-6 * expected[0], "{:?} {:?}", got.values, expected);
            let gv = &g * got.vectors.column(c);
            let residual = gv - got.vectors.column(c) * got.values[c];
            assert!(residual.norm() < 1e-4 * expected[0]);
        }
        let vtv = got.vectors.transpose() * &got.vectors;
        assert!((vtv - DMatrix::identity(3, 3)).abs().max() < 1e-8);
    }
}
