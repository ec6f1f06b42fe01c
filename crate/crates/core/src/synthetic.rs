//! Seeded synthetic data with known structure, for tests, benchmarks, and
//! demos.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::tensor::Tensor3;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Three isotropic unit-variance blobs in `dim` dimensions whose centers
/// form an equilateral triangle with side `separation`.
pub fn three_blobs(per_blob: usize, dim: usize, separation: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
    assert!(dim >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = separation * 3f64.sqrt() / 2.0;
    let centers = [(0.0, 0.0), (separation, 0.0), (separation / 2.0, h)];
    let n = per_blob * 3;
    let labels: Vec<usize> = (0..n).map(|i| i / per_blob).collect();
    let x = Array2::from_shape_fn((n, dim), |(i, j)| {
        let (cx, cy) = centers[i / per_blob];
        let c = match j {
            0 => cx,
            1 => cy,
            _ => 0.0,
        };
        c + normal(&mut rng)
    });
    (x, labels)
}

/// Two interleaved half-circles with Gaussian jitter.
pub fn two_moons(n: usize, noise: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outer = n / 2;
    let mut x = Array2::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (px, py, l) = if i < outer {
            let t = std::f64::consts::PI * i as f64 / (outer - 1).max(1) as f64;
            (t.cos(), t.sin(), 0)
        } else {
            let k = i - outer;
            let t = std::f64::consts::PI * k as f64 / (n - outer - 1).max(1) as f64;
            (1.0 - t.cos(), 0.5 - t.sin(), 1)
        };
        x[[i, 0]] = px + noise * normal(&mut rng);
        x[[i, 1]] = py + noise * normal(&mut rng);
        labels.push(l);
    }
    (x, labels)
}

/// i.i.d. standard normal matrix where the first `cluster_size` rows have
/// column `column` shifted by `shift`.
pub fn planted_cluster(
    rows: usize,
    cols: usize,
    cluster_size: usize,
    column: usize,
    shift: f64,
    seed: u64,
) -> (Array2<f64>, BTreeSet<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = Array2::from_shape_fn((rows, cols), |_| normal(&mut rng));
    for r in 0..cluster_size {
        y[[r, column]] += shift;
    }
    (y, (0..cluster_size).collect())
}

/// Tensor whose instances fall in two classes that differ only through a
/// temporal signal mixed into the variables with `weights`:
/// `x[t,n,d] = weights[d] * s_class(n)(t) + noise`.
pub fn weighted_signal_tensor(
    time: usize,
    instances: usize,
    weights: &[f64],
    noise: f64,
    seed: u64,
) -> (Tensor3, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..instances).map(|n| usize::from(n >= instances / 2)).collect();
    let signal = |class: usize, t: usize| {
        let phase = 2.0 * std::f64::consts::PI * t as f64 / time as f64;
        if class == 0 { phase.sin() } else { -phase.sin() }
    };
    let values = Array3::from_shape_fn((time, instances, weights.len()), |(t, n, d)| {
        weights[d] * signal(labels[n], t) + noise * normal(&mut rng)
    });
    (Tensor3::from_array(values).expect("valid dims"), labels)
}

/// Standard normal tensor.
pub fn random_tensor(dims: [usize; 3], seed: u64) -> Tensor3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor3::from_array(Array3::from_shape_fn((dims[0], dims[1], dims[2]), |_| normal(&mut rng)))
        .expect("valid dims")
}

/// Random tensor whose variable fibers share a dominant latent direction.
pub fn low_rank_tensor(dims: [usize; 3], seed: u64) -> Tensor3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loading: Array1<f64> = (0..dims[2]).map(|_| 1.0 + normal(&mut rng).abs()).collect();
    let values = Array3::from_shape_fn((dims[0], dims[1], dims[2]), |_| 0.0);
    let mut values = values;
    for t in 0..dims[0] {
        for n in 0..dims[1] {
            let latent = 3.0 * normal(&mut rng);
            for d in 0..dims[2] {
                values[[t, n, d]] = latent * loading[d] + 0.5 * normal(&mut rng);
            }
        }
    }
    Tensor3::from_array(values).expect("valid dims")
}

/// Uniform integer in `0..n`; shared helper for randomized tests.
pub fn random_index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    rng.random_range(0..n)
}
