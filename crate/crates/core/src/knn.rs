//! Exact k-nearest-neighbor search under Euclidean distance.

use ndarray::{ArrayView1, ArrayView2};
use rayon::prelude::*;

/// Neighbor lists for every row, nearest first, self excluded. Equal
/// distances are ordered by row index.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    pub k: usize,
    pub indices: Vec<Vec<usize>>,
    pub distances: Vec<Vec<f64>>,
}

impl KnnGraph {
    /// Directed edge set `(i, j)` for j in the neighbors of i.
    pub fn edges(&self) -> std::collections::BTreeSet<(usize, usize)> {
        self.indices
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&j| (i, j)))
            .collect()
    }
}

pub fn squared_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// All other rows of `x` ordered by distance from row `i`.
pub fn ranked_neighbors(x: ArrayView2<'_, f64>, i: usize) -> Vec<(f64, usize)> {
    let row = x.row(i);
    let mut all: Vec<(f64, usize)> = (0..x.nrows())
        .filter(|&j| j != i)
        .map(|j| (squared_distance(row, x.row(j)), j))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all
}

pub fn exact_knn(x: ArrayView2<'_, f64>, k: usize) -> KnnGraph {
    let n = x.nrows();
    let k = k.min(n.saturating_sub(1));
    let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ranked = ranked_neighbors(x, i);
            ranked
                .into_iter()
                .take(k)
                .map(|(d2, j)| (j, d2.sqrt()))
                .unzip()
        })
        .collect();
    let (indices, distances) = rows.into_iter().unzip();
    KnnGraph {
        k,
        indices,
        distances,
    }
}
