//! Independent oracles shared by the integration suites. Nothing here calls
//! into the library's numerical paths.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2};

pub fn to_dmatrix(a: ArrayView2<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Column covariance with population normalization, computed with nalgebra.
pub fn covariance_oracle(x: ArrayView2<'_, f64>) -> DMatrix<f64> {
    let m = to_dmatrix(x);
    let n = m.nrows() as f64;
    let means = m.row_mean();
    let mut centered = m.clone();
    for mut row in centered.row_iter_mut() {
        row -= &means;
    }
    centered.transpose() * &centered / n
}

/// Eigenpairs sorted by descending eigenvalue.
pub fn sorted_eigen(c: &DMatrix<f64>) -> Vec<(f64, Array1<f64>)> {
    let eig = SymmetricEigen::new(c.clone());
    let mut pairs: Vec<(f64, Array1<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &v)| (v, eig.eigenvectors.column(k).iter().copied().collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs
}

pub fn cosine(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.dot(b) / (a.dot(a).sqrt() * b.dot(b).sqrt())
}

/// Top eigenvector of `Cov(Y) - alpha Cov(Y_rest)` by dense decomposition.
pub fn contrast_oracle(y: ArrayView2<'_, f64>, members: &[bool], alpha: f64) -> Array1<f64> {
    let rest_rows: Vec<usize> = (0..y.nrows()).filter(|&i| !members[i]).collect();
    let rest = y.select(ndarray::Axis(0), &rest_rows);
    let c = covariance_oracle(y) - covariance_oracle(rest.view()) * alpha;
    sorted_eigen(&c).remove(0).1
}

/// Bin index by linear scan over edges; the last bin is closed.
pub fn bin_by_scan(edges: &[f64], v: f64) -> usize {
    let bins = edges.len() - 1;
    for b in 0..bins {
        if v >= edges[b] && v < edges[b + 1] {
            return b;
        }
    }
    bins - 1
}

/// Trustworthiness straight from its definition, O(n^3).
pub fn trustworthiness_oracle(y: ArrayView2<'_, f64>, z: ArrayView2<'_, f64>, k: usize) -> f64 {
    let n = y.nrows();
    let dist = |m: ArrayView2<'_, f64>, i: usize, j: usize| -> f64 {
        m.row(i).iter().zip(m.row(j).iter()).map(|(a, b)| (a - b).powi(2)).sum()
    };
    // rank of j among i's neighbors: 1 + number of points strictly closer,
    // plus equally close points with smaller index.
    let rank = |m: ArrayView2<'_, f64>, i: usize, j: usize| -> usize {
        let dj = dist(m, i, j);
        1 + (0..n)
            .filter(|&l| l != i && l != j)
            .filter(|&l| {
                let dl = dist(m, i, l);
                dl < dj || (dl == dj && l < j)
            })
            .count()
    };
    let mut total = 0usize;
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            if rank(z, i, j) <= k {
                let r = rank(y, i, j);
                if r > k {
                    total += r - k;
                }
            }
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * total as f64
}

/// Orthogonal Procrustes residual after optimally rotating/reflecting `b`
/// onto `a` (both centered), relative to the norm of `a`.
pub fn procrustes_residual(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let center = |m: &Array2<f64>| {
        let mean = m.mean_axis(ndarray::Axis(0)).unwrap();
        to_dmatrix((m - &mean).view())
    };
    let (a, b) = (center(a), center(b));
    let svd = (b.transpose() * &a).svd(true, true);
    let rot = svd.u.unwrap() * svd.v_t.unwrap();
    let diff = b * rot - &a;
    diff.norm() / a.norm().max(1e-300)
}

/// |mean difference| of cluster and rest projections onto `v`, over the
/// pooled population standard deviation.
pub fn separation(y: ArrayView2<'_, f64>, members: &[bool], v: &Array1<f64>) -> f64 {
    let p = y.dot(v);
    let pick = |want: bool| -> Vec<f64> {
        p.iter().zip(members).filter(|(_, &m)| m == want).map(|(x, _)| *x).collect()
    };
    let (a, b) = (pick(true), pick(false));
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let ss = |s: &[f64], m: f64| s.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    let (ma, mb) = (mean(&a), mean(&b));
    let pooled = ((ss(&a, ma) + ss(&b, mb)) / (a.len() + b.len()) as f64).sqrt();
    (ma - mb).abs() / pooled
}
