use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::knn::ranked_neighbors;

/// Trustworthiness of embedding `z` with respect to `y` at neighborhood
/// size `k`. Points among the `k` nearest in `z` but not in `y` are
/// penalized by how far down the `y` ranking they sit. Requires `k < n/2`.
pub fn trustworthiness(y: ArrayView2<'_, f64>, z: ArrayView2<'_, f64>, k: usize) -> Result<f64> {
    let n = y.nrows();
    if z.nrows() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: z.nrows(),
        });
    }
    if k == 0 || 2 * k >= n {
        return Err(Error::TooFewRows {
            minimum: 2 * k.max(1) + 1,
            actual: n,
        });
    }
    let penalty: usize = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rank = vec![0usize; n];
            for (r, (_, j)) in ranked_neighbors(y, i).into_iter().enumerate() {
                rank[j] = r + 1;
            }
            ranked_neighbors(z, i)
                .into_iter()
                .take(k)
                .map(|(_, j)| rank[j].saturating_sub(k))
                .sum::<usize>()
        })
        .sum();
    let (n, k) = (n as f64, k as f64);
    Ok(1.0 - 2.0 / (n * k * (2.0 * n - 3.0 * k - 1.0)) * penalty as f64)
}
