//! First reduction: compress one mode of the tensor to a single value per
//! fiber, yielding the matrix that the second reduction embeds.

use std::fmt;

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{covariance, dominant_eigenpair};
use crate::tensor::{fold, unfold, Mode, Tensor3};

/// Ordered choice of (compressed mode, embedded mode). The third mode
/// supplies the plotted points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawCombo", into = "RawCombo")]
pub struct ModeCombo {
    first: Mode,
    second: Mode,
}

#[derive(Serialize, Deserialize)]
struct RawCombo {
    first: Mode,
    second: Mode,
}

impl TryFrom<RawCombo> for ModeCombo {
    type Error = Error;
    fn try_from(raw: RawCombo) -> Result<Self> {
        ModeCombo::new(raw.first, raw.second)
    }
}

impl From<ModeCombo> for RawCombo {
    fn from(c: ModeCombo) -> Self {
        RawCombo {
            first: c.first,
            second: c.second,
        }
    }
}

impl ModeCombo {
    pub fn new(first: Mode, second: Mode) -> Result<Self> {
        if first == second {
            return Err(Error::InvalidCombo(first));
        }
        Ok(Self { first, second })
    }

    pub fn first(self) -> Mode {
        self.first
    }

    pub fn second(self) -> Mode {
        self.second
    }

    /// The mode whose indices become rows of Y and points of the embedding.
    pub fn point_mode(self) -> Mode {
        self.first.remaining(self.second).expect("first != second")
    }

    pub fn all() -> [ModeCombo; 6] {
        use Mode::*;
        [
            (Time, Instance),
            (Time, Variable),
            (Instance, Time),
            (Instance, Variable),
            (Variable, Time),
            (Variable, Instance),
        ]
        .map(|(first, second)| ModeCombo { first, second })
    }

    /// The two combos plotting `point_mode`, ordered by compressed mode axis.
    pub fn for_point_mode(point_mode: Mode) -> [ModeCombo; 2] {
        let (a, b) = point_mode.others();
        [
            ModeCombo { first: b, second: a },
            ModeCombo { first: a, second: b },
        ]
    }
}

impl fmt::Display for ModeCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.first, self.second)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage1Method {
    #[default]
    Pca,
    Mean,
}

impl std::str::FromStr for Stage1Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca" => Ok(Self::Pca),
            "mean" => Ok(Self::Mean),
            other => Err(Error::Parse(format!("unknown first-stage method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressedMatrix {
    /// Rows index the point mode, columns the second-stage mode.
    pub y: Array2<f64>,
    /// Parametric mapping: weights over the compressed mode.
    pub w: Array1<f64>,
    /// Explained variance ratio for PCA, 1.0 for mean compression.
    pub quality: f64,
    pub combo: ModeCombo,
    pub method: Stage1Method,
}

impl CompressedMatrix {
    pub fn compressed_mode(&self) -> Mode {
        self.combo.first()
    }
}

/// Top principal axis of the rows of `x` and its explained variance ratio.
/// The largest-magnitude component of the axis is positive.
pub fn pca_fit_1d(x: ArrayView2<'_, f64>) -> Result<(Array1<f64>, f64)> {
    if x.nrows() < 2 {
        return Err(Error::TooFewRows {
            minimum: 2,
            actual: x.nrows(),
        });
    }
    if x.ncols() == 0 {
        return Err(Error::Degenerate("no columns".into()));
    }
    let cov = covariance(x);
    let total = cov.diag().sum();
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(total > 1e-24 * (1.0 + scale * scale)) {
        return Err(Error::Degenerate("degenerate input: zero total variance".into()));
    }
    let pair = dominant_eigenpair(&cov)?;
    let evr = (pair.value / total).clamp(0.0, 1.0);
    Ok((pair.vector, evr))
}

/// Unfolds along `combo.first`, reduces every fiber to `w · fiber`, and folds
/// the result into Y with rows in the point mode.
pub fn compress(tensor: &Tensor3, combo: ModeCombo, method: Stage1Method) -> Result<CompressedMatrix> {
    let unfolded = unfold(tensor, combo.first());
    let (w, quality) = match method {
        Stage1Method::Pca => pca_fit_1d(unfolded.matrix.view())?,
        Stage1Method::Mean => {
            let len = unfolded.matrix.ncols();
            (Array1::from_elem(len, 1.0 / len as f64), 1.0)
        }
    };
    let projected = unfolded.matrix.dot(&w);
    let folded = fold(projected.view(), &unfolded.row_index_map)?;
    let y = if unfolded.row_index_map.outer == combo.point_mode() {
        folded
    } else {
        folded.reversed_axes().as_standard_layout().into_owned()
    };
    Ok(CompressedMatrix {
        y,
        w,
        quality,
        combo,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr2, Array3};

    #[test]
    fn six_distinct_combos() {
        let all = ModeCombo::all();
        let set: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(set.len(), 6);
        for m in Mode::ALL {
            for c in ModeCombo::for_point_mode(m) {
                assert_eq!(c.point_mode(), m);
            }
        }
        assert!(ModeCombo::new(Mode::Time, Mode::Time).is_err());
    }

    #[test]
    fn combo_serde_rejects_equal_modes() {
        let bad: std::result::Result<ModeCombo, _> =
            serde_json::from_str(r#"{"first":"time","second":"time"}"#);
        assert!(bad.is_err());
        let ok: ModeCombo = serde_json::from_str(r#"{"first":"variable","second":"time"}"#).unwrap();
        assert_eq!(ok.point_mode(), Mode::Instance);
    }

    #[test]
    fn single_axis_variance() {
        let x = arr2(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]);
        let (w, evr) = pca_fit_1d(x.view()).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-12 && w[1].abs() < 1e-12);
        assert!((evr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_is_degenerate() {
        let x = arr2(&[[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]);
        assert!(matches!(pca_fit_1d(x.view()), Err(Error::Degenerate(_))));
        assert!(pca_fit_1d(arr2(&[[1.0, 2.0]]).view()).is_err());
    }

    #[test]
    fn isotropic_cloud_half_variance() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let x = Array2::from_shape_fn((4000, 2), |_| StandardNormal.sample(&mut rng));
        let (_, evr) = pca_fit_1d(x.view()).unwrap();
        assert!((evr - 0.5).abs() <= 0.05, "evr {evr}");
    }

    #[test]
    fn compress_shape_and_linearity() {
        let values = Array3::from_shape_fn((5, 4, 3), |(t, n, d)| {
            ((t * 7 + n * 3 + d * d) % 11) as f64 + 0.1 * d as f64
        });
        let tensor = Tensor3::from_array(values).unwrap();
        for combo in ModeCombo::all() {
            let c = compress(&tensor, combo, Stage1Method::Pca).unwrap();
            let p = combo.point_mode();
            assert_eq!(c.y.dim(), (tensor.len(p), tensor.len(combo.second())));
            assert!((c.w.dot(&c.w) - 1.0).abs() < 1e-9);
            for i in 0..c.y.nrows() {
                for j in 0..c.y.ncols() {
                    let mut coords = [0; 3];
                    coords[p.axis()] = i;
                    coords[combo.second().axis()] = j;
                    let fiber = tensor.fiber(combo.first(), coords);
                    assert!((c.y[[i, j]] - c.w.dot(&fiber)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn mean_compression_of_index_tensor() {
        let tensor =
            Tensor3::from_array(Array3::from_shape_fn((3, 4, 5), |(_, _, d)| d as f64)).unwrap();
        let combo = ModeCombo::new(Mode::Variable, Mode::Time).unwrap();
        let c = compress(&tensor, combo, Stage1Method::Mean).unwrap();
        assert_eq!(c.quality, 1.0);
        assert_eq!(c.y.dim(), (4, 3));
        assert!(c.y.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn single_active_variable_recovers_its_slice() {
        // Variable fibers are (c, 0, 0): Y is the first variable's slice.
        let tensor = Tensor3::from_array(Array3::from_shape_fn((4, 3, 3), |(t, n, d)| {
            if d == 0 {
                (t * 3 + n) as f64 - 2.0
            } else {
                0.0
            }
        }))
        .unwrap();
        let combo = ModeCombo::new(Mode::Variable, Mode::Time).unwrap();
        let c = compress(&tensor, combo, Stage1Method::Pca).unwrap();
        assert!((c.w[0] - 1.0).abs() < 1e-12);
        for n in 0..3 {
            for t in 0..4 {
                assert!((c.y[[n, t]] - tensor.get(t, n, 0)).abs() < 1e-12);
            }
        }
    }
}
