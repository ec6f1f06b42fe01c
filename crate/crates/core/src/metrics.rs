//! Cluster-recovery metrics for embeddings with known labels.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::knn::squared_distance;

const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITER: usize = 300;

/// Lloyd's k-means with k-means++ seeding; the lowest-inertia run of
/// several seeded restarts wins.
pub fn kmeans(x: ArrayView2<'_, f64>, k: usize, seed: u64) -> Vec<usize> {
    let n = x.nrows();
    assert!(k >= 1 && k <= n, "k must be in 1..=rows");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let (inertia, labels) = lloyd(x, k, &mut rng);
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    best.expect("at least one restart").1
}

fn lloyd(x: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> (f64, Vec<usize>) {
    let n = x.nrows();
    let mut centers = Array2::zeros((k, x.ncols()));
    centers.row_mut(0).assign(&x.row(rng.random_range(0..n)));
    let mut nearest = vec![f64::INFINITY; n];
    for c in 1..k {
        for i in 0..n {
            nearest[i] = nearest[i].min(squared_distance(x.row(i), centers.row(c - 1)));
        }
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, d) in nearest.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).assign(&x.row(pick));
    }

    let mut labels = vec![0usize; n];
    for iter in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for i in 0..n {
            let (best, _) = (0..k)
                .map(|c| (c, squared_distance(x.row(i), centers.row(c))))
                .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
            if labels[i] != best || iter == 0 {
                changed |= labels[i] != best;
                labels[i] = best;
            }
        }
        if !changed && iter > 0 {
            break;
        }
        let mut sums = Array2::<f64>::zeros((k, x.ncols()));
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            sums.row_mut(l).scaled_add(1.0, &x.row(i));
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers.row_mut(c).assign(&(&sums.row(c) / counts[c] as f64));
            }
        }
    }
    let inertia = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| squared_distance(x.row(i), centers.row(l)))
        .sum();
    (inertia, labels)
}

/// Fraction of points whose predicted cluster's majority label matches
/// their own.
pub fn purity(predicted: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(predicted.len(), truth.len());
    if predicted.is_empty() {
        return 1.0;
    }
    let mut counts: std::collections::BTreeMap<usize, std::collections::BTreeMap<usize, usize>> =
        Default::default();
    for (&p, &t) in predicted.iter().zip(truth) {
        *counts.entry(p).or_default().entry(t).or_default() += 1;
    }
    let majority: usize = counts.values().map(|m| m.values().max().copied().unwrap_or(0)).sum();
    majority as f64 / predicted.len() as f64
}

/// k-means on `z` with k equal to the number of distinct labels, scored by
/// purity.
pub fn cluster_purity(z: ArrayView2<'_, f64>, truth: &[usize], seed: u64) -> f64 {
    let k = truth.iter().collect::<std::collections::BTreeSet<_>>().len().max(1);
    purity(&kmeans(z, k.min(z.nrows()), seed), truth)
}
