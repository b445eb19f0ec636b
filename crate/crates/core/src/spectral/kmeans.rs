use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansResult {
    pub assignment: Vec<u32>,
    pub centers: Vec<f64>,
    pub inertia: f64,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm with k-means++ seeding; keeps the restart with the
/// lowest inertia. `points` is row-major with `dim` columns. Panics when
/// there are fewer points than clusters.
pub fn kmeans(points: &[f64], dim: usize, k: usize, opts: &KMeansOptions, rng: &mut impl Rng) -> KMeansResult {
    assert!(dim > 0 && points.len() % dim == 0);
    let n = points.len() / dim;
    assert!(n >= k && k > 0, "need at least {k} points, got {n}");
    let mut best: Option<KMeansResult> = None;
    for _ in 0..opts.restarts.max(1) {
        let run = lloyd(points, dim, k, opts.max_iter, rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    best.unwrap()
}

fn plus_plus(points: &[f64], dim: usize, k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let n = points.len() / dim;
    let point = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut centers = Vec::with_capacity(k * dim);
    centers.extend_from_slice(point(rng.random_range(0..n)));
    let mut d2: Vec<f64> = (0..n).map(|i| dist2(point(i), &centers[..dim])).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = point(pick).to_vec();
        for i in 0..n {
            d2[i] = d2[i].min(dist2(point(i), &c));
        }
        centers.extend(c);
    }
    centers
}

fn lloyd(points: &[f64], dim: usize, k: usize, max_iter: usize, rng: &mut impl Rng) -> KMeansResult {
    let n = points.len() / dim;
    let point = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut centers = plus_plus(points, dim, k, rng);
    let mut assignment = vec![u32::MAX; n];
    let mut dists = vec![0.0; n];
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        for i in 0..n {
            let (mut best, mut best_d) = (0, f64::INFINITY);
            for c in 0..k {
                let d = dist2(point(i), &centers[c * dim..(c + 1) * dim]);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            dists[i] = best_d;
            if assignment[i] != best as u32 {
                assignment[i] = best as u32;
                changed = true;
            }
        }

        let mut sums = vec![0.0; k * dim];
        let mut sizes = vec![0usize; k];
        for i in 0..n {
            let c = assignment[i] as usize;
            sizes[c] += 1;
            for (s, x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(point(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if sizes[c] == 0 {
                // move the point farthest from its center into the empty cluster
                let far = (0..n)
                    .filter(|&i| sizes[assignment[i] as usize] > 1)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]))
                    .expect("more points than clusters");
                let old = assignment[far] as usize;
                sizes[old] -= 1;
                for (s, x) in sums[old * dim..(old + 1) * dim].iter_mut().zip(point(far)) {
                    *s -= x;
                }
                sums[c * dim..(c + 1) * dim].copy_from_slice(point(far));
                sizes[c] = 1;
                assignment[far] = c as u32;
                dists[far] = 0.0;
                changed = true;
            }
        }
        for c in 0..k {
            for x in &mut sums[c * dim..(c + 1) * dim] {
                *x /= sizes[c] as f64;
            }
        }
        centers = sums;
        if !changed {
            break;
        }
    }
    let inertia = (0..n)
        .map(|i| {
            let c = assignment[i] as usize;
            dist2(point(i), &centers[c * dim..(c + 1) * dim])
        })
        .sum();
    KMeansResult {
        assignment,
        centers,
        inertia,
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn separated_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut points = Vec::new();
        for c in 0..3 {
            for _ in 0..20 {
                points.push(c as f64 * 10.0 + rng.random::<f64>());
                points.push(rng.random::<f64>());
            }
        }
        let res = kmeans(&points, 2, 3, &KMeansOptions::default(), &mut rng);
        for c in 0..3 {
            let block = &res.assignment[c * 20..(c + 1) * 20];
            assert!(block.iter().all(|&a| a == block[0]));
        }
        assert!(res.inertia < 60.0);
    }

    #[test]
    fn duplicate_points_fill_every_cluster() {
        let points = vec![0.0; 10];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let res = kmeans(&points, 1, 3, &KMeansOptions::default(), &mut rng);
        let mut sizes = [0; 3];
        for &a in &res.assignment {
            sizes[a as usize] += 1;
        }
        assert!(sizes.iter().all(|&s| s > 0), "{sizes:?}");
    }
}
