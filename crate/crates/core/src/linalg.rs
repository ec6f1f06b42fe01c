//! Small dense linear-algebra kernels: covariance and power iteration.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Convergence threshold on the change of the unit eigenvector between
/// iterations.
pub const POWER_TOLERANCE: f64 = 1e-10;
/// Iteration cap across all acceleration stages.
pub const POWER_MAX_ITERATIONS: usize = 10_000;

const ITERATIONS_PER_STAGE: usize = 100;
const MAX_SQUARINGS: usize = 8;
const MAX_SQUARING_DIM: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub vector: Array1<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Column-centered covariance with population normalization.
pub fn covariance(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = x.nrows() as f64;
    let means = x.mean_axis(Axis(0)).expect("at least one row");
    let centered = &x - &means;
    centered.t().dot(&centered) / n
}

/// Flips `v` so its largest-magnitude component is positive. The first
/// index wins ties. Returns the sign that was applied.
pub fn canonical_sign(v: &mut Array1<f64>) -> f64 {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.mapv_inplace(|x| -x);
    }
    sign
}

fn start_vector(dim: usize) -> Array1<f64> {
    // Fixed, non-symmetric pattern so the start is almost surely not
    // orthogonal to the dominant eigenvector.
    let v = Array1::from_shape_fn(dim, |i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.7548776662).fract());
    let norm = v.dot(&v).sqrt();
    v / norm
}

/// Eigenvector of the largest algebraic eigenvalue of symmetric `c`.
///
/// Runs power iteration on `c + shift*I`, where the shift is a Gershgorin
/// bound making the matrix positive semidefinite. When convergence stalls
/// the iteration matrix is squared, which raises the eigenvalue ratio to
/// its square without changing the eigenvectors.
pub fn dominant_eigenpair(c: &Array2<f64>) -> Result<EigenPair> {
    let dim = c.nrows();
    assert_eq!(dim, c.ncols(), "square matrix required");
    if dim == 0 {
        return Err(Error::Degenerate("empty matrix".into()));
    }
    let shift = (0..dim)
        .map(|i| {
            let off: f64 = (0..dim).filter(|&j| j != i).map(|j| c[[i, j]].abs()).sum();
            c[[i, i]] - off
        })
        .fold(f64::INFINITY, f64::min)
        .min(0.0)
        .abs();
    let mut a = c.clone();
    for i in 0..dim {
        a[[i, i]] += shift;
    }
    let trace = a.diag().sum();
    if !(trace > f64::MIN_POSITIVE) {
        return Err(Error::Degenerate("zero matrix".into()));
    }
    a /= trace;

    let mut v = start_vector(dim);
    let mut iterations = 0;
    let mut squarings = 0;
    let mut stage_iterations = 0;
    loop {
        if iterations >= POWER_MAX_ITERATIONS {
            return Err(Error::NoConvergence { iterations });
        }
        let mut next = a.dot(&v);
        let norm = next.dot(&next).sqrt();
        iterations += 1;
        stage_iterations += 1;
        if !(norm > f64::MIN_POSITIVE) || !norm.is_finite() {
            return Err(Error::Degenerate("iteration collapsed to zero".into()));
        }
        next /= norm;
        let change = (&next - &v).dot(&(&next - &v)).sqrt();
        v = next;
        if change < POWER_TOLERANCE {
            break;
        }
        if stage_iterations >= ITERATIONS_PER_STAGE && squarings < MAX_SQUARINGS && dim <= MAX_SQUARING_DIM {
            a = a.dot(&a);
            let t = a.diag().sum();
            a /= t;
            squarings += 1;
            stage_iterations = 0;
        }
    }
    canonical_sign(&mut v);
    let value = v.dot(&c.dot(&v));
    Ok(EigenPair {
        vector: v,
        value,
        iterations,
    })
}

/// Leading `k` eigenpairs of a symmetric positive semidefinite matrix by
/// repeated deflation. Stops early when the remaining spectrum is zero.
pub fn leading_eigenpairs(c: &Array2<f64>, k: usize) -> Result<Vec<EigenPair>> {
    let scale = c.diag().iter().map(|x| x.abs()).sum::<f64>();
    let mut work = c.clone();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let remaining = work.diag().sum();
        if !(remaining > 1e-12 * scale) {
            break;
        }
        let pair = match dominant_eigenpair(&work) {
            Ok(p) => p,
            Err(Error::Degenerate(_)) => break,
            Err(e) => return Err(e),
        };
        if pair.value <= 1e-12 * scale {
            break;
        }
        let v = pair.vector.view().insert_axis(Axis(1));
        work = work - pair.value * v.dot(&v.t());
        out.push(pair);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn covariance_population() {
        let x = arr2(&[[0.0, 0.0], [1.0, 2.0], [2.0, 4.0]]);
        let c = covariance(x.view());
        assert!((c[[0, 0]] - 2.0 / 3.0).abs() < 1e-12);
        assert!((c[[0, 1]] - 4.0 / 3.0).abs() < 1e-12);
        assert!((c[[1, 1]] - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_matrix() {
        let c = arr2(&[[1.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 2.0]]);
        let p = dominant_eigenpair(&c).unwrap();
        assert!((p.value - 3.0).abs() < 1e-12);
        assert!((p.vector[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn indefinite_picks_largest_algebraic() {
        let c = arr2(&[[-5.0, 0.0], [0.0, 1.0]]);
        let p = dominant_eigenpair(&c).unwrap();
        assert!((p.value - 1.0).abs() < 1e-9);
        assert!((p.vector[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn near_degenerate_gap_converges() {
        let c = arr2(&[[1.0, 0.0], [0.0, 0.9995]]);
        let p = dominant_eigenpair(&c).unwrap();
        assert!((p.vector[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let c = Array2::<f64>::zeros((3, 3));
        assert!(matches!(dominant_eigenpair(&c), Err(Error::Degenerate(_))));
    }

    #[test]
    fn deflation_gives_two_components() {
        let c = arr2(&[[4.0, 1.0, 0.0], [1.0, 3.0, 0.0], [0.0, 0.0, 0.5]]);
        let pairs = leading_eigenpairs(&c, 2).unwrap();
        assert_eq!(pairs.len(), 2);
        let l1 = 3.5 + 5f64.sqrt() / 2.0;
        let l2 = 3.5 - 5f64.sqrt() / 2.0;
        assert!((pairs[0].value - l1).abs() < 1e-9);
        assert!((pairs[1].value - l2).abs() < 1e-9);
        assert!(pairs[0].vector.dot(&pairs[1].vector).abs() < 1e-8);
    }

    #[test]
    fn rank_one_stops_after_one() {
        let c = arr2(&[[1.0, 1.0], [1.0, 1.0]]);
        assert_eq!(leading_eigenpairs(&c, 2).unwrap().len(), 1);
    }

    #[test]
    fn sign_convention() {
        let mut v = ndarray::arr1(&[0.1, -0.9, 0.3]);
        canonical_sign(&mut v);
        assert!(v[1] > 0.0);
    }
}
