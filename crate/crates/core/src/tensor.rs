//! Third-order tensor model and the unfold/fold index machinery.
//!
//! Axes are fixed: time is axis 0, instance axis 1, variable axis 2.
//! Unfolding along a target mode produces one row per fiber. Of the two
//! non-target modes, the later axis is the outer (slow) row index and the
//! earlier axis is the inner (fast) one, so unfolding along `Variable`
//! yields rows ordered `(n0,t0), (n0,t1), …, (n1,t0), …`.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Array3, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Time,
    Instance,
    Variable,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Time, Mode::Instance, Mode::Variable];

    pub fn axis(self) -> usize {
        match self {
            Mode::Time => 0,
            Mode::Instance => 1,
            Mode::Variable => 2,
        }
    }

    pub fn from_axis(axis: usize) -> Option<Mode> {
        Mode::ALL.get(axis).copied()
    }

    /// The two other modes in axis order.
    pub fn others(self) -> (Mode, Mode) {
        match self {
            Mode::Time => (Mode::Instance, Mode::Variable),
            Mode::Instance => (Mode::Time, Mode::Variable),
            Mode::Variable => (Mode::Time, Mode::Instance),
        }
    }

    /// The mode that is neither `self` nor `other`.
    pub fn remaining(self, other: Mode) -> Option<Mode> {
        if self == other {
            return None;
        }
        Mode::ALL.into_iter().find(|m| *m != self && *m != other)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Time => "time",
            Mode::Instance => "instance",
            Mode::Variable => "variable",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "time" | "t" => Ok(Mode::Time),
            "instance" | "n" => Ok(Mode::Instance),
            "variable" | "d" => Ok(Mode::Variable),
            other => Err(Error::Parse(format!("unknown mode '{other}'"))),
        }
    }
}

/// Optional per-mode display metadata. Time metadata holds ISO-8601 dates,
/// the others hold free-form tags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuxMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable: Option<Vec<String>>,
}

impl AuxMetadata {
    pub fn get(&self, mode: Mode) -> Option<&[String]> {
        match mode {
            Mode::Time => self.time.as_deref(),
            Mode::Instance => self.instance.as_deref(),
            Mode::Variable => self.variable.as_deref(),
        }
    }
}

/// Dense labeled tensor indexed `(t, n, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    values: Array3<f64>,
    labels: [Vec<String>; 3],
    aux: AuxMetadata,
}

impl Tensor3 {
    pub fn new(
        values: Array3<f64>,
        time_labels: Vec<String>,
        instance_labels: Vec<String>,
        variable_labels: Vec<String>,
    ) -> Result<Self> {
        let labels = [time_labels, instance_labels, variable_labels];
        let shape = values.shape();
        for mode in Mode::ALL {
            let len = shape[mode.axis()];
            if len < 2 {
                return Err(Error::InvalidTensor(format!(
                    "{mode} mode has length {len}, at least 2 required"
                )));
            }
            if labels[mode.axis()].len() != len {
                return Err(Error::InvalidTensor(format!(
                    "{} {mode} labels for a mode of length {len}",
                    labels[mode.axis()].len()
                )));
            }
        }
        if let Some(((t, n, d), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                value: *v,
                location: format!("({t}, {n}, {d})"),
            });
        }
        Ok(Self {
            values,
            labels,
            aux: AuxMetadata::default(),
        })
    }

    /// Builds a tensor with generated labels `t0…`, `n0…`, `d0…`.
    pub fn from_array(values: Array3<f64>) -> Result<Self> {
        let (t, n, d) = values.dim();
        let gen = |p: &str, len: usize| (0..len).map(|i| format!("{p}{i}")).collect();
        Self::new(values, gen("t", t), gen("n", n), gen("d", d))
    }

    pub fn with_aux(mut self, aux: AuxMetadata) -> Result<Self> {
        for mode in Mode::ALL {
            if let Some(meta) = aux.get(mode) {
                if meta.len() != self.len(mode) {
                    return Err(Error::InvalidTensor(format!(
                        "{} {mode} aux entries for a mode of length {}",
                        meta.len(),
                        self.len(mode)
                    )));
                }
            }
        }
        self.aux = aux;
        Ok(self)
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    pub fn dims(&self) -> [usize; 3] {
        let (t, n, d) = self.values.dim();
        [t, n, d]
    }

    pub fn len(&self, mode: Mode) -> usize {
        self.values.len_of(Axis(mode.axis()))
    }

    pub fn labels(&self, mode: Mode) -> &[String] {
        &self.labels[mode.axis()]
    }

    pub fn aux(&self) -> &AuxMetadata {
        &self.aux
    }

    pub fn get(&self, t: usize, n: usize, d: usize) -> f64 {
        self.values[[t, n, d]]
    }

    /// Fiber along `mode` through the cell whose other coordinates are taken
    /// from `coords` (the entry at `mode.axis()` is ignored).
    pub fn fiber(&self, mode: Mode, coords: [usize; 3]) -> ArrayView1<'_, f64> {
        let (a, b) = mode.others();
        let mut view = self.values.view();
        // Collapse the higher axis first so the lower index stays valid.
        view.collapse_axis(Axis(b.axis()), coords[b.axis()]);
        view.collapse_axis(Axis(a.axis()), coords[a.axis()]);
        view.index_axis_move(Axis(b.axis()), 0)
            .index_axis_move(Axis(a.axis()), 0)
    }

    fn with_values(&self, values: Array3<f64>) -> Self {
        Self {
            values,
            labels: self.labels.clone(),
            aux: self.aux.clone(),
        }
    }
}

/// Bijection between unfolded rows and `(outer, inner)` index pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowIndexMap {
    pub outer: Mode,
    pub inner: Mode,
    pub outer_len: usize,
    pub inner_len: usize,
}

impl RowIndexMap {
    pub fn len(&self) -> usize {
        self.outer_len * self.inner_len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pair(&self, row: usize) -> (usize, usize) {
        (row / self.inner_len, row % self.inner_len)
    }

    pub fn row(&self, outer: usize, inner: usize) -> usize {
        outer * self.inner_len + inner
    }

    /// Full tensor coordinates of `row` with `target_index` on the target axis.
    pub fn coords(&self, row: usize, target_index: usize) -> [usize; 3] {
        let (i, j) = self.pair(row);
        let mut c = [target_index; 3];
        c[self.outer.axis()] = i;
        c[self.inner.axis()] = j;
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedMatrix {
    pub matrix: Array2<f64>,
    pub row_index_map: RowIndexMap,
    pub target: Mode,
}

pub fn unfold(tensor: &Tensor3, target: Mode) -> UnfoldedMatrix {
    let (early, late) = target.others();
    let map = RowIndexMap {
        outer: late,
        inner: early,
        outer_len: tensor.len(late),
        inner_len: tensor.len(early),
    };
    // Permute to (outer, inner, target); a standard-layout copy then reshapes
    // directly into the row order above.
    let perm = [late.axis(), early.axis(), target.axis()];
    let permuted = tensor.values.view().permuted_axes(perm);
    let cols = tensor.len(target);
    let data: Vec<f64> = permuted.iter().copied().collect();
    let matrix = Array2::from_shape_vec((map.len(), cols), data)
        .expect("permuted tensor has rows * cols elements");
    UnfoldedMatrix {
        matrix,
        row_index_map: map,
        target,
    }
}

/// Inverse of the unfolding row order: `M[i][j] = v[map.row(i, j)]`.
pub fn fold(v: ArrayView1<'_, f64>, map: &RowIndexMap) -> Result<Array2<f64>> {
    if v.len() != map.len() {
        return Err(Error::LengthMismatch {
            expected: map.len(),
            actual: v.len(),
        });
    }
    let data: Vec<f64> = v.iter().copied().collect();
    Ok(Array2::from_shape_vec((map.outer_len, map.inner_len), data)
        .expect("length checked above"))
}

/// Rescales every slice along `along` to mean 0 and population standard
/// deviation 1. Constant slices become all zeros.
pub fn standardize(tensor: &Tensor3, along: Mode) -> Tensor3 {
    let mut values = tensor.values.clone();
    for mut slice in values.axis_iter_mut(Axis(along.axis())) {
        let count = slice.len() as f64;
        let mean = slice.sum() / count;
        let var = slice.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / count;
        let sd = var.sqrt();
        if sd <= 1e-12 * (1.0 + mean.abs()) {
            slice.fill(0.0);
        } else {
            slice.mapv_inplace(|x| (x - mean) / sd);
        }
    }
    tensor.with_values(values)
}

/// Per-slice `(mean, population sd)` along `along`; test and report helper.
pub fn slice_moments(tensor: &Tensor3, along: Mode) -> Vec<(f64, f64)> {
    tensor
        .values
        .axis_iter(Axis(along.axis()))
        .map(|slice| {
            let count = slice.len() as f64;
            let mean = slice.sum() / count;
            let var = slice.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / count;
            (mean, var.sqrt())
        })
        .collect()
}
