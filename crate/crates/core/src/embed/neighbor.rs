//! UMAP-style neighbor embedding.
//!
//! Builds the exact k-NN graph, converts distances to fuzzy memberships with
//! a per-point bandwidth, symmetrizes by probabilistic union, and lays the
//! graph out in 2-D with edge-sampled attraction and negative-sampled
//! repulsion under a linearly decaying learning rate.

use std::collections::{BTreeMap, HashMap};

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::job::JobControl;
use crate::knn::{exact_knn, KnnGraph};

use super::{principal_scores, Embedding, Stage2Method};

const SPREAD: f64 = 1.0;
const NEGATIVE_SAMPLE_RATE: usize = 5;
const REPULSION_STRENGTH: f64 = 1.0;
const LEARNING_RATE: f64 = 1.0;
const GRADIENT_CLIP: f64 = 4.0;
const INIT_EXTENT: f64 = 10.0;
const INIT_NOISE: f64 = 1e-4;
const BANDWIDTH_STEPS: usize = 64;
const BANDWIDTH_TOLERANCE: f64 = 1e-5;
const MIN_BANDWIDTH_SCALE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborParams {
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for NeighborParams {
    fn default() -> Self {
        Self {
            n_neighbors: 15,
            min_dist: 0.1,
            epochs: 500,
            seed: 0,
        }
    }
}

impl std::hash::Hash for NeighborParams {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.n_neighbors.hash(state);
        self.min_dist.to_bits().hash(state);
        self.epochs.hash(state);
        self.seed.hash(state);
    }
}

impl Eq for NeighborParams {}

/// Least-squares fit of `1 / (1 + a d^(2b))` to the target membership curve
/// that is 1 below `min_dist` and decays as `exp(-(d - min_dist) / spread)`.
pub fn fit_curve_params(min_dist: f64, spread: f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..300).map(|i| 3.0 * spread * i as f64 / 299.0).collect();
    let target: Vec<f64> = xs
        .iter()
        .map(|&x| if x < min_dist { 1.0 } else { (-(x - min_dist) / spread).exp() })
        .collect();
    let residuals = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&target)
            .map(|(&x, &t)| {
                let f = 1.0 / (1.0 + a * x.powf(2.0 * b));
                (f - t) * (f - t)
            })
            .sum()
    };

    // Levenberg-Marquardt on (a, b).
    let (mut a, mut b) = (1.0, 1.0);
    let mut lambda = 1e-3;
    let mut cost = residuals(a, b);
    for _ in 0..500 {
        let (mut jtj, mut jtr) = ([[0.0f64; 2]; 2], [0.0f64; 2]);
        for (&x, &t) in xs.iter().zip(&target) {
            if x == 0.0 {
                continue;
            }
            let p = x.powf(2.0 * b);
            let denom = 1.0 + a * p;
            let f = 1.0 / denom;
            let r = f - t;
            let da = -p / (denom * denom);
            let db = -a * p * 2.0 * x.ln() / (denom * denom);
            let g = [da, db];
            for i in 0..2 {
                jtr[i] += g[i] * r;
                for j in 0..2 {
                    jtj[i][j] += g[i] * g[j];
                }
            }
        }
        let m00 = jtj[0][0] * (1.0 + lambda);
        let m11 = jtj[1][1] * (1.0 + lambda);
        let m01 = jtj[0][1];
        let det = m00 * m11 - m01 * m01;
        if det.abs() < 1e-300 {
            break;
        }
        let step_a = (m11 * jtr[0] - m01 * jtr[1]) / det;
        let step_b = (m00 * jtr[1] - m01 * jtr[0]) / det;
        let (na, nb) = (a - step_a, b - step_b);
        let new_cost = if na > 0.0 && nb > 0.0 { residuals(na, nb) } else { f64::INFINITY };
        if new_cost < cost {
            let improvement = cost - new_cost;
            a = na;
            b = nb;
            cost = new_cost;
            lambda *= 0.3;
            if improvement < 1e-14 {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    (a, b)
}

/// Row index of the first identical row for every row, and the list of
/// distinct representatives.
fn deduplicate(y: ArrayView2<'_, f64>) -> (Vec<usize>, Vec<usize>) {
    let mut first: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut unique = Vec::new();
    let mut assignment = Vec::with_capacity(y.nrows());
    for (i, row) in y.rows().into_iter().enumerate() {
        // +0.0 and -0.0 must compare equal.
        let key: Vec<u64> = row.iter().map(|v| (v + 0.0).to_bits()).collect();
        let slot = *first.entry(key).or_insert_with(|| {
            unique.push(i);
            unique.len() - 1
        });
        assignment.push(slot);
    }
    (assignment, unique)
}

/// Per-point `(rho, sigma)`: distance to the nearest neighbor and the
/// bandwidth making the membership sum equal `log2(k)`.
fn smooth_distances(graph: &KnnGraph) -> Vec<(f64, f64)> {
    let target = (graph.k as f64).log2();
    let mean_all: f64 = {
        let all: Vec<f64> = graph.distances.iter().flatten().copied().collect();
        all.iter().sum::<f64>() / all.len().max(1) as f64
    };
    graph
        .distances
        .iter()
        .map(|dists| {
            let rho = dists.iter().copied().find(|&d| d > 0.0).unwrap_or(0.0);
            let (mut lo, mut hi, mut mid) = (0.0, f64::INFINITY, 1.0);
            for _ in 0..BANDWIDTH_STEPS {
                let psum: f64 = dists
                    .iter()
                    .map(|&d| {
                        let excess = d - rho;
                        if excess > 0.0 { (-excess / mid).exp() } else { 1.0 }
                    })
                    .sum();
                if (psum - target).abs() < BANDWIDTH_TOLERANCE {
                    break;
                }
                if psum > target {
                    hi = mid;
                    mid = (lo + hi) / 2.0;
                } else {
                    lo = mid;
                    mid = if hi.is_infinite() { mid * 2.0 } else { (lo + hi) / 2.0 };
                }
            }
            let mean_i = dists.iter().sum::<f64>() / dists.len().max(1) as f64;
            let floor = MIN_BANDWIDTH_SCALE * if rho > 0.0 { mean_i } else { mean_all };
            (rho, mid.max(floor))
        })
        .collect()
}

/// Symmetric fuzzy graph as a sorted list of directed edges with weights.
fn fuzzy_graph(graph: &KnnGraph) -> Vec<(usize, usize, f64)> {
    let bandwidths = smooth_distances(graph);
    let mut directed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, (nbrs, dists)) in graph.indices.iter().zip(&graph.distances).enumerate() {
        let (rho, sigma) = bandwidths[i];
        for (&j, &d) in nbrs.iter().zip(dists) {
            let w = if d - rho <= 0.0 { 1.0 } else { (-(d - rho) / sigma).exp() };
            directed.insert((i, j), w);
        }
    }
    let mut sym: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (&(i, j), &w) in &directed {
        let back = directed.get(&(j, i)).copied().unwrap_or(0.0);
        let u = w + back - w * back;
        sym.insert((i, j), u);
        sym.insert((j, i), u);
    }
    sym.into_iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|((i, j), w)| (i, j, w))
        .collect()
}

fn clip(v: f64) -> f64 {
    v.clamp(-GRADIENT_CLIP, GRADIENT_CLIP)
}

fn initial_layout(y: ArrayView2<'_, f64>, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
    let n = y.nrows();
    let mut z = if n >= 2 {
        principal_scores(y, 2)?.0
    } else {
        Array2::zeros((n, 2))
    };
    let extent = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if extent > 0.0 {
        z *= INIT_EXTENT / extent;
    }
    z.mapv_inplace(|v| v + INIT_NOISE * INIT_EXTENT * (rng.random::<f64>() - 0.5));
    Ok(z)
}

/// Embeds the rows of `y` in 2-D. Identical rows share a coordinate.
pub fn embed_neighbor(y: ArrayView2<'_, f64>, params: NeighborParams, job: &JobControl) -> Result<Embedding> {
    let n = y.nrows();
    if params.n_neighbors == 0 || n < params.n_neighbors + 1 {
        return Err(Error::TooFewRows {
            minimum: params.n_neighbors.max(1) + 1,
            actual: n,
        });
    }
    job.report(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (assignment, unique) = deduplicate(y);
    let distinct = y.select(ndarray::Axis(0), &unique);
    let m = distinct.nrows();

    let mut layout = if m < 2 {
        Array2::zeros((m, 2))
    } else {
        let graph = exact_knn(distinct.view(), params.n_neighbors.min(m - 1));
        job.checkpoint()?;
        let edges = fuzzy_graph(&graph);
        job.report(0.05);
        let mut z = initial_layout(distinct.view(), &mut rng)?;
        optimize(&mut z, &edges, params, &mut rng, &job.subrange(0.05, 1.0))?;
        z
    };
    if layout.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("embedding diverged".into()));
    }
    if m == 0 {
        layout = Array2::zeros((0, 2));
    }

    let z = Array2::from_shape_fn((n, 2), |(i, c)| layout[[assignment[i], c]]);
    job.report(1.0);
    Ok(Embedding {
        z,
        combo: None,
        method: Stage2Method::Neighbor,
        params: Some(params),
        rank_deficient: false,
    })
}

fn optimize(
    z: &mut Array2<f64>,
    edges: &[(usize, usize, f64)],
    params: NeighborParams,
    rng: &mut ChaCha8Rng,
    job: &JobControl,
) -> Result<()> {
    let n = z.nrows();
    let epochs = params.epochs.max(1);
    let (a, b) = fit_curve_params(params.min_dist, SPREAD);
    let max_w = edges.iter().map(|e| e.2).fold(0.0, f64::max);
    let kept: Vec<_> = edges
        .iter()
        .copied()
        .filter(|e| e.2 >= max_w / epochs as f64)
        .collect();
    let per_sample: Vec<f64> = kept.iter().map(|e| max_w / e.2).collect();
    let per_negative: Vec<f64> = per_sample
        .iter()
        .map(|p| p / NEGATIVE_SAMPLE_RATE as f64)
        .collect();
    let mut next_sample = per_sample.clone();
    let mut next_negative = per_negative.clone();

    for epoch in 0..epochs {
        job.checkpoint()?;
        let alpha = LEARNING_RATE * (1.0 - epoch as f64 / epochs as f64);
        let e = epoch as f64;
        for (idx, &(i, j, _)) in kept.iter().enumerate() {
            if next_sample[idx] > e {
                continue;
            }
            let dx = z[[i, 0]] - z[[j, 0]];
            let dy = z[[i, 1]] - z[[j, 1]];
            let d2 = dx * dx + dy * dy;
            if d2 > 0.0 {
                let coeff = -2.0 * a * b * d2.powf(b - 1.0) / (1.0 + a * d2.powf(b));
                let gx = clip(coeff * dx) * alpha;
                let gy = clip(coeff * dy) * alpha;
                z[[i, 0]] += gx;
                z[[i, 1]] += gy;
                z[[j, 0]] -= gx;
                z[[j, 1]] -= gy;
            }
            next_sample[idx] += per_sample[idx];

            let negatives = ((e - next_negative[idx]) / per_negative[idx]).floor().max(0.0) as usize;
            for _ in 0..negatives {
                let k = rng.random_range(0..n);
                if k == i {
                    continue;
                }
                let dx = z[[i, 0]] - z[[k, 0]];
                let dy = z[[i, 1]] - z[[k, 1]];
                let d2 = dx * dx + dy * dy;
                let (gx, gy) = if d2 > 0.0 {
                    let coeff = 2.0 * REPULSION_STRENGTH * b / ((0.001 + d2) * (1.0 + a * d2.powf(b)));
                    (clip(coeff * dx), clip(coeff * dy))
                } else {
                    (GRADIENT_CLIP, GRADIENT_CLIP)
                };
                z[[i, 0]] += gx * alpha;
                z[[i, 1]] += gy * alpha;
            }
            next_negative[idx] += negatives as f64 * per_negative[idx];
        }
        job.report((epoch + 1) as f64 / epochs as f64);
    }
    Ok(())
}
