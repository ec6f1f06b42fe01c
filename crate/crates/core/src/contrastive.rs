//! Contrastive feature contributions for a selected cluster.
//!
//! A cluster's rows of Y are contrasted with the remaining rows by taking
//! the leading eigenvector of `Cov(Y) - alpha * Cov(Y_rest)`. The contrast
//! parameter is picked from a fixed grid by how well the resulting direction
//! separates cluster and rest. Contributions are then sign-adjusted so that
//! a positive entry means the cluster tends to have higher values in that
//! feature, and scaled into [-1, 1].

use std::collections::BTreeSet;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{covariance, dominant_eigenpair};

/// Number of log-spaced positive contrast values tried besides zero.
pub const ALPHA_GRID_POINTS: usize = 15;
pub const ALPHA_MIN: f64 = 1e-3;
pub const ALPHA_MAX: f64 = 1e3;
/// A best separation below this many standard errors counts as none.
pub const NO_CONTRAST_THRESHOLD: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSelection {
    pub cluster_id: u32,
    pub member_rows: BTreeSet<usize>,
    pub color_index: usize,
    pub label: String,
}

impl ClusterSelection {
    /// 0/1 membership over `rows` rows.
    pub fn membership(&self, rows: usize) -> Vec<bool> {
        let mut m = vec![false; rows];
        for &r in &self.member_rows {
            if r < rows {
                m[r] = true;
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContrastWarning {
    /// The contrast matrix vanished; contributions are all zero.
    ZeroContrast,
    /// No contrast value separated the cluster from the rest.
    NoSeparation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawContributions {
    /// Unit-norm contrastive direction over Y's columns.
    pub vector: Array1<f64>,
    pub alpha: f64,
    /// Separation of cluster and rest along `vector`, in pooled-sd units.
    pub discrepancy: f64,
    pub warning: Option<ContrastWarning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureContributions {
    pub a: Vec<f64>,
    pub cluster_id: u32,
    pub alpha: f64,
    pub sign_flipped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<ContrastWarning>,
}

/// `{0}` followed by log-spaced values from `ALPHA_MIN` to `ALPHA_MAX`.
pub fn alpha_grid() -> Vec<f64> {
    let (lo, hi) = (ALPHA_MIN.log10(), ALPHA_MAX.log10());
    std::iter::once(0.0)
        .chain((0..ALPHA_GRID_POINTS).map(|i| {
            10f64.powf(lo + (hi - lo) * i as f64 / (ALPHA_GRID_POINTS - 1) as f64)
        }))
        .collect()
}

fn split(y: ArrayView2<'_, f64>, membership: &[bool]) -> (Array2<f64>, Array2<f64>) {
    let (mut inside, mut outside) = (Vec::new(), Vec::new());
    for (i, &m) in membership.iter().enumerate() {
        if m {
            inside.push(i);
        } else {
            outside.push(i);
        }
    }
    (y.select(Axis(0), &inside), y.select(Axis(0), &outside))
}

fn validate(y: ArrayView2<'_, f64>, members: &BTreeSet<usize>) -> Result<Vec<bool>> {
    let rows = y.nrows();
    if let Some(&bad) = members.iter().find(|&&r| r >= rows) {
        return Err(Error::RowOutOfRange { index: bad, rows });
    }
    if members.len() < 2 {
        return Err(Error::InvalidSelection(format!(
            "cluster has {} point(s), minimum 2 points",
            members.len()
        )));
    }
    if rows - members.len() < 2 {
        return Err(Error::InvalidSelection(format!(
            "only {} point(s) outside the cluster, minimum 2 points",
            rows - members.len()
        )));
    }
    let mut m = vec![false; rows];
    for &r in members {
        m[r] = true;
    }
    Ok(m)
}

/// `|mean(Y_K v) - mean(Y_R v)|` over the pooled population sd of the
/// projections.
pub fn discrepancy(cluster: ArrayView2<'_, f64>, rest: ArrayView2<'_, f64>, v: ArrayView1<'_, f64>) -> f64 {
    let pk = cluster.dot(&v);
    let pr = rest.dot(&v);
    let (nk, nr) = (pk.len() as f64, pr.len() as f64);
    let (mk, mr) = (pk.sum() / nk, pr.sum() / nr);
    let ss = pk.iter().map(|x| (x - mk).powi(2)).sum::<f64>() + pr.iter().map(|x| (x - mr).powi(2)).sum::<f64>();
    let pooled = (ss / (nk + nr)).sqrt();
    let diff = (mk - mr).abs();
    let scale = 1e-12 * (1.0 + mk.abs().max(mr.abs()));
    if diff <= scale {
        0.0
    } else {
        diff / pooled.max(scale)
    }
}

fn direction(cov_all: &Array2<f64>, cov_rest: &Array2<f64>, alpha: f64) -> Result<Option<Array1<f64>>> {
    let contrast = cov_all - &(cov_rest * alpha);
    match dominant_eigenpair(&contrast) {
        Ok(pair) => Ok(Some(pair.vector)),
        Err(Error::Degenerate(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Contrastive direction at a fixed `alpha`.
pub fn contributions_at_alpha(y: ArrayView2<'_, f64>, members: &BTreeSet<usize>, alpha: f64) -> Result<RawContributions> {
    let membership = validate(y, members)?;
    let (cluster, rest) = split(y, &membership);
    let cov_all = covariance(y);
    let cov_rest = covariance(rest.view());
    Ok(match direction(&cov_all, &cov_rest, alpha)? {
        Some(v) => RawContributions {
            discrepancy: discrepancy(cluster.view(), rest.view(), v.view()),
            vector: v,
            alpha,
            warning: None,
        },
        None => zero_contributions(y.ncols(), alpha),
    })
}

fn zero_contributions(cols: usize, alpha: f64) -> RawContributions {
    RawContributions {
        vector: Array1::zeros(cols),
        alpha,
        discrepancy: 0.0,
        warning: Some(ContrastWarning::ZeroContrast),
    }
}

/// Contrastive direction with `alpha` chosen from [`alpha_grid`] by maximal
/// discrepancy; ties go to the smaller alpha.
pub fn feature_contributions(y: ArrayView2<'_, f64>, members: &BTreeSet<usize>) -> Result<RawContributions> {
    let membership = validate(y, members)?;
    let (cluster, rest) = split(y, &membership);
    let cov_all = covariance(y);
    let cov_rest = covariance(rest.view());

    let mut best: Option<RawContributions> = None;
    for alpha in alpha_grid() {
        let Some(v) = direction(&cov_all, &cov_rest, alpha)? else {
            if alpha == 0.0 {
                return Ok(zero_contributions(y.ncols(), 0.0));
            }
            continue;
        };
        let score = discrepancy(cluster.view(), rest.view(), v.view());
        let better = match &best {
            None => true,
            Some(b) => score > b.discrepancy * (1.0 + 1e-12) && score > b.discrepancy + 1e-15,
        };
        if better {
            best = Some(RawContributions {
                vector: v,
                alpha,
                discrepancy: score,
                warning: None,
            });
        }
    }
    let mut best = best.expect("alpha = 0 always yields a direction or returns early");

    let (nk, nr) = (cluster.nrows() as f64, rest.nrows() as f64);
    let standard_error = (1.0 / nk + 1.0 / nr).sqrt();
    if best.discrepancy < NO_CONTRAST_THRESHOLD * standard_error {
        let mut fallback = contributions_at_alpha(y, members, 0.0)?;
        fallback.warning = Some(fallback.warning.unwrap_or(ContrastWarning::NoSeparation));
        best = fallback;
    }
    Ok(best)
}

/// Pearson correlation; zero when either side is constant.
pub fn pearson(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.sum() / n, y.sum() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y.iter()) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}

/// Per-column correlation between membership and the column.
pub fn membership_correlations(y: ArrayView2<'_, f64>, membership: &[bool]) -> Array1<f64> {
    let m: Array1<f64> = membership.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    y.columns().into_iter().map(|col| pearson(m.view(), col)).collect()
}

pub fn agreement_score(a: ArrayView1<'_, f64>, y: ArrayView2<'_, f64>, membership: &[bool]) -> f64 {
    membership_correlations(y, membership).dot(&a)
}

/// Flips `raw_a` when it disagrees with the membership correlations.
/// A zero agreement keeps the original signs.
pub fn adjust_signs(raw_a: ArrayView1<'_, f64>, y: ArrayView2<'_, f64>, membership: &[bool]) -> (Array1<f64>, bool) {
    let s = agreement_score(raw_a, y, membership);
    if s < 0.0 {
        (raw_a.mapv(|v| -v), true)
    } else {
        (raw_a.to_owned(), false)
    }
}

/// Divides by the maximum absolute value; zero vectors stay zero.
pub fn scale_contributions(a: ArrayView1<'_, f64>) -> Array1<f64> {
    let max = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        a.to_owned()
    } else {
        a.mapv(|v| v / max)
    }
}

/// Contributions, sign adjustment, and scaling for one cluster.
pub fn explain_cluster(y: ArrayView2<'_, f64>, selection: &ClusterSelection) -> Result<FeatureContributions> {
    let raw = feature_contributions(y, &selection.member_rows)?;
    let membership = selection.membership(y.nrows());
    let (signed, flipped) = adjust_signs(raw.vector.view(), y, &membership);
    Ok(FeatureContributions {
        a: scale_contributions(signed.view()).to_vec(),
        cluster_id: selection.cluster_id,
        alpha: raw.alpha,
        sign_flipped: flipped,
        warning: raw.warning,
    })
}
