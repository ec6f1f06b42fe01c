use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::linalg::{canonical_sign, covariance, leading_eigenpairs};

use super::{Embedding, Stage2Method};

/// Scores of the rows of `x` on its leading `k` principal axes.
///
/// Each axis has its largest-magnitude loading positive. Columns beyond the
/// numerical rank are zero; the second value is that rank (at most `k`).
pub fn principal_scores(x: ArrayView2<'_, f64>, k: usize) -> Result<(Array2<f64>, usize)> {
    let n = x.nrows();
    let means = x.mean_axis(Axis(0)).expect("non-empty");
    let centered = &x - &means;
    let mut scores = Array2::zeros((n, k));

    if x.ncols() <= n {
        let pairs = leading_eigenpairs(&covariance(x), k)?;
        for (c, pair) in pairs.iter().enumerate() {
            scores.column_mut(c).assign(&centered.dot(&pair.vector));
        }
        Ok((scores, pairs.len()))
    } else {
        // Wide matrix: eigenvectors of the row Gram matrix give the scores
        // without forming the column covariance.
        let gram = centered.dot(&centered.t()) / n as f64;
        let pairs = leading_eigenpairs(&gram, k)?;
        for (c, pair) in pairs.iter().enumerate() {
            let sd = (pair.value * n as f64).sqrt();
            let mut loading: Array1<f64> = centered.t().dot(&pair.vector) / sd;
            let sign = canonical_sign(&mut loading);
            scores
                .column_mut(c)
                .assign(&(&pair.vector * (sd * sign)));
        }
        Ok((scores, pairs.len()))
    }
}

/// Projects rows onto the top two principal components.
pub fn embed_linear(y: ArrayView2<'_, f64>) -> Result<Embedding> {
    if y.nrows() < 3 {
        return Err(Error::TooFewRows {
            minimum: 3,
            actual: y.nrows(),
        });
    }
    let (scores, rank) = principal_scores(y, 2)?;
    Ok(Embedding {
        z: scores.slice(s![.., 0..2]).to_owned(),
        combo: None,
        method: Stage2Method::Linear,
        params: None,
        rank_deficient: rank < 2,
    })
}
