//! Workflow orchestration: pipelines per mode combination, cluster
//! selections with their contributions, histograms, and baseline
//! comparisons.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::contrastive::{explain_cluster, ClusterSelection, FeatureContributions};
use crate::embed::{embed_linear, embed_neighbor, trustworthiness, Embedding, NeighborParams, Stage2Method};
use crate::error::{Error, Result};
use crate::job::JobControl;
use crate::metrics::cluster_purity;
use crate::stage1::{compress, CompressedMatrix, ModeCombo, Stage1Method};
use crate::tensor::{standardize, unfold, Mode, Tensor3};

pub const DEFAULT_BINS: usize = 20;
pub const DEFAULT_COLUMN_CAP: usize = 2_000_000;
pub const QUALITY_NEIGHBORS: usize = 10;

/// Ten-slot categorical palette; a cluster's slot is `(id - 1) % 10`.
pub const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac",
];

pub fn color_slot(cluster_id: u32) -> usize {
    (cluster_id.saturating_sub(1) as usize) % PALETTE.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub method1: Stage1Method,
    pub method2: Stage2Method,
    pub neighbor: NeighborParams,
    /// Standardize each slice along the compressed mode before stage 1.
    pub standardize: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            method1: Stage1Method::Pca,
            method2: Stage2Method::Neighbor,
            neighbor: NeighborParams::default(),
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisResult {
    pub combo: ModeCombo,
    pub compressed: CompressedMatrix,
    pub embedding: Embedding,
    pub point_mode: Mode,
    /// Trustworthiness and the neighborhood size it was measured at.
    pub trustworthiness: Option<(usize, f64)>,
}

fn quality_k(rows: usize) -> Option<usize> {
    let k = QUALITY_NEIGHBORS.min(rows.saturating_sub(1) / 2);
    (k >= 1).then_some(k)
}

fn measure(y: ArrayView2<'_, f64>, z: ArrayView2<'_, f64>) -> Result<Option<(usize, f64)>> {
    match quality_k(y.nrows()) {
        Some(k) => Ok(Some((k, trustworthiness(y, z, k)?))),
        None => Ok(None),
    }
}

fn embed(y: ArrayView2<'_, f64>, config: &PipelineConfig, job: &JobControl) -> Result<Embedding> {
    match config.method2 {
        Stage2Method::Linear => embed_linear(y),
        Stage2Method::Neighbor => {
            // Small point sets get as many neighbors as they have.
            let params = NeighborParams {
                n_neighbors: config.neighbor.n_neighbors.min(y.nrows().saturating_sub(1)).max(1),
                ..config.neighbor
            };
            embed_neighbor(y, params, job)
        }
    }
}

fn prepare(tensor: &Tensor3, compressed_mode: Mode, config: &PipelineConfig) -> Tensor3 {
    if config.standardize {
        standardize(tensor, compressed_mode)
    } else {
        tensor.clone()
    }
}

/// Both reductions for one combination.
pub fn run_pipeline(tensor: &Tensor3, combo: ModeCombo, config: &PipelineConfig, job: &JobControl) -> Result<AnalysisResult> {
    job.report(0.0);
    let prepared = prepare(tensor, combo.first(), config);
    let compressed = compress(&prepared, combo, config.method1)?;
    job.checkpoint()?;
    let mut embedding = embed(compressed.y.view(), config, &job.subrange(0.1, 0.9))?;
    embedding.combo = Some(combo);
    let trust = measure(compressed.y.view(), embedding.z.view())?;
    job.report(1.0);
    Ok(AnalysisResult {
        combo,
        point_mode: combo.point_mode(),
        compressed,
        embedding,
        trustworthiness: trust,
    })
}

/// The two results whose plotted points are the indices of `point_mode`.
pub fn results_for_point_mode(
    tensor: &Tensor3,
    point_mode: Mode,
    config: &PipelineConfig,
    job: &JobControl,
) -> [Result<AnalysisResult>; 2] {
    let [a, b] = ModeCombo::for_point_mode(point_mode);
    [
        run_pipeline(tensor, a, config, &job.subrange(0.0, 0.5)),
        run_pipeline(tensor, b, config, &job.subrange(0.5, 1.0)),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramGroup {
    /// `None` for the unselected remainder.
    pub cluster_id: Option<u32>,
    pub count: usize,
    pub frequencies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSet {
    pub feature_index: usize,
    pub bin_edges: Vec<f64>,
    pub groups: Vec<HistogramGroup>,
    pub y_max: f64,
}

/// Relative-frequency histograms of one column of `y` for each cluster and
/// for the rows outside every cluster, over shared bin edges.
pub fn compute_histograms(
    y: ArrayView2<'_, f64>,
    clusters: &[ClusterSelection],
    feature_index: usize,
    bins: usize,
) -> Result<HistogramSet> {
    if feature_index >= y.ncols() {
        return Err(Error::InvalidSelection(format!(
            "feature index {feature_index} out of range for {} features",
            y.ncols()
        )));
    }
    if bins == 0 {
        return Err(Error::InvalidSelection("at least one bin required".into()));
    }
    let rows = y.nrows();
    let mut owner: Vec<Option<usize>> = vec![None; rows];
    for (c, cluster) in clusters.iter().enumerate() {
        for &r in &cluster.member_rows {
            if r >= rows {
                return Err(Error::RowOutOfRange { index: r, rows });
            }
            if owner[r].replace(c).is_some() {
                return Err(Error::InvalidSelection(format!("row {r} belongs to two clusters")));
            }
        }
    }

    let column = y.column(feature_index);
    let (mut lo, mut hi) = column
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if rows == 0 {
        (lo, hi) = (0.0, 0.0);
    }
    if hi <= lo {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + width * i as f64).collect();
    edges.push(hi);

    let bin_of = |v: f64| edges.partition_point(|&e| e <= v).saturating_sub(1).min(bins - 1);
    let mut counts = vec![vec![0usize; bins]; clusters.len() + 1];
    for (r, &v) in column.iter().enumerate() {
        let g = owner[r].unwrap_or(clusters.len());
        counts[g][bin_of(v)] += 1;
    }

    let mut groups = Vec::with_capacity(clusters.len() + 1);
    for (g, c) in counts.iter().enumerate() {
        let total: usize = c.iter().sum();
        let cluster_id = clusters.get(g).map(|s| s.cluster_id);
        if total == 0 && cluster_id.is_none() {
            continue;
        }
        let frequencies = c
            .iter()
            .map(|&k| if total == 0 { 0.0 } else { k as f64 / total as f64 })
            .collect();
        groups.push(HistogramGroup {
            cluster_id,
            count: total,
            frequencies,
        });
    }
    let y_max = groups
        .iter()
        .flat_map(|g| g.frequencies.iter().copied())
        .fold(0.0, f64::max);
    Ok(HistogramSet {
        feature_index,
        bin_edges: edges,
        groups,
        y_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    PcaEmbed,
    MeanEmbed,
    UnfoldEmbed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineEntry {
    pub baseline: Baseline,
    pub feature_count: usize,
    pub embedding: Embedding,
    pub trustworthiness: Option<(usize, f64)>,
    pub purity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineReport {
    pub point_mode: Mode,
    pub combo: ModeCombo,
    pub entries: Vec<BaselineEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BaselineOptions {
    /// Mode compressed by the two-step baselines; see [`default_compressed_mode`].
    pub first: Option<Mode>,
    /// Ground-truth class per point, enabling purity.
    pub labels: Option<Vec<usize>>,
    pub column_cap: Option<usize>,
}

/// Variable when it is not the point mode, time otherwise.
pub fn default_compressed_mode(point_mode: Mode) -> Mode {
    if point_mode == Mode::Variable {
        Mode::Time
    } else {
        Mode::Variable
    }
}

/// Column count of the flat unfolding with `point_mode` rows.
pub fn flat_feature_count(dims: [usize; 3], point_mode: Mode) -> usize {
    let (a, b) = point_mode.others();
    dims[a.axis()] * dims[b.axis()]
}

/// PCA & embed, mean & embed, and flat unfolding & embed over the same
/// standardized tensor and seed.
pub fn compare_baselines(
    tensor: &Tensor3,
    point_mode: Mode,
    config: &PipelineConfig,
    options: &BaselineOptions,
    job: &JobControl,
) -> Result<BaselineReport> {
    let first = options.first.unwrap_or_else(|| default_compressed_mode(point_mode));
    let second = first
        .remaining(point_mode)
        .ok_or(Error::InvalidCombo(point_mode))?;
    let combo = ModeCombo::new(first, second)?;
    let points = tensor.len(point_mode);
    if let Some(labels) = &options.labels {
        if labels.len() != points {
            return Err(Error::LengthMismatch {
                expected: points,
                actual: labels.len(),
            });
        }
    }
    let cap = options.column_cap.unwrap_or(DEFAULT_COLUMN_CAP);
    let flat_columns = flat_feature_count(tensor.dims(), point_mode);
    if flat_columns > cap {
        return Err(Error::TooManyColumns {
            columns: flat_columns,
            cap,
        });
    }

    let prepared = prepare(tensor, first, config);
    let score = |embedding: &Embedding| {
        options
            .labels
            .as_ref()
            .map(|l| cluster_purity(embedding.z.view(), l, config.neighbor.seed))
    };
    let mut entries = Vec::with_capacity(3);
    for (i, (baseline, method)) in [
        (Baseline::PcaEmbed, Stage1Method::Pca),
        (Baseline::MeanEmbed, Stage1Method::Mean),
    ]
    .into_iter()
    .enumerate()
    {
        let c = compress(&prepared, combo, method)?;
        let mut embedding = embed(c.y.view(), config, &job.subrange(i as f64 / 3.0, (i + 1) as f64 / 3.0))?;
        embedding.combo = Some(combo);
        entries.push(BaselineEntry {
            baseline,
            feature_count: c.y.ncols(),
            trustworthiness: measure(c.y.view(), embedding.z.view())?,
            purity: score(&embedding),
            embedding,
        });
    }

    let flat: Array2<f64> = unfold(&prepared, point_mode)
        .matrix
        .reversed_axes()
        .as_standard_layout()
        .into_owned();
    let embedding = embed(flat.view(), config, &job.subrange(2.0 / 3.0, 1.0))?;
    entries.push(BaselineEntry {
        baseline: Baseline::UnfoldEmbed,
        feature_count: flat.ncols(),
        trustworthiness: measure(flat.view(), embedding.z.view())?,
        purity: score(&embedding),
        embedding,
    });
    job.report(1.0);
    Ok(BaselineReport {
        point_mode,
        combo,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct ResultKey {
    combo: ModeCombo,
    config: PipelineConfig,
}

type ClusterKey = Vec<(u32, Vec<usize>)>;

/// Everything needed to replay a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDocument {
    pub dataset: String,
    pub point_mode: Mode,
    pub config: PipelineConfig,
    pub clusters: Vec<ClusterSelection>,
    #[serde(default)]
    pub next_cluster_id: u32,
}

/// Interactive analysis state for one client.
#[derive(Debug, Clone)]
pub struct Session {
    dataset: String,
    tensor: Arc<Tensor3>,
    config: PipelineConfig,
    point_mode: Mode,
    clusters: Vec<ClusterSelection>,
    next_cluster_id: u32,
    results: HashMap<ResultKey, Arc<AnalysisResult>>,
    contributions: HashMap<(ClusterKey, ModeCombo, PipelineConfig), Arc<Vec<FeatureContributions>>>,
}

impl Session {
    pub fn new(dataset: impl Into<String>, tensor: Tensor3, config: PipelineConfig) -> Self {
        Self {
            dataset: dataset.into(),
            tensor: Arc::new(tensor),
            config,
            point_mode: Mode::Instance,
            clusters: Vec::new(),
            next_cluster_id: 1,
            results: HashMap::new(),
            contributions: HashMap::new(),
        }
    }

    pub fn dataset(&self) -> &str {
        &self.dataset
    }

    pub fn tensor(&self) -> &Tensor3 {
        &self.tensor
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn point_mode(&self) -> Mode {
        self.point_mode
    }

    pub fn clusters(&self) -> &[ClusterSelection] {
        &self.clusters
    }

    pub fn active_combos(&self) -> [ModeCombo; 2] {
        ModeCombo::for_point_mode(self.point_mode)
    }

    /// Changing the point mode or configuration drops the clusters, whose
    /// indices refer to the previous point set.
    pub fn configure(&mut self, point_mode: Mode, config: PipelineConfig) {
        if point_mode != self.point_mode {
            self.clusters.clear();
        }
        self.point_mode = point_mode;
        self.config = config;
    }

    pub fn cached_result_count(&self) -> usize {
        self.results.len()
    }

    pub fn result(&mut self, combo: ModeCombo, job: &JobControl) -> Result<Arc<AnalysisResult>> {
        let key = ResultKey {
            combo,
            config: self.config,
        };
        if let Some(hit) = self.results.get(&key) {
            job.report(1.0);
            return Ok(hit.clone());
        }
        let result = Arc::new(run_pipeline(&self.tensor, combo, &self.config, job)?);
        self.results.insert(key, result.clone());
        Ok(result)
    }

    /// Results for both active combinations; errors are per combination.
    pub fn active_results(&mut self, job: &JobControl) -> Vec<(ModeCombo, Result<Arc<AnalysisResult>>)> {
        let [a, b] = self.active_combos();
        vec![
            (a, self.result(a, &job.subrange(0.0, 0.5))),
            (b, self.result(b, &job.subrange(0.5, 1.0))),
        ]
    }

    fn cluster_key(clusters: &[ClusterSelection]) -> ClusterKey {
        clusters
            .iter()
            .map(|c| (c.cluster_id, c.member_rows.iter().copied().collect()))
            .collect()
    }

    fn compute_contributions(
        &mut self,
        clusters: &[ClusterSelection],
        combo: ModeCombo,
        job: &JobControl,
    ) -> Result<Arc<Vec<FeatureContributions>>> {
        let key = (Self::cluster_key(clusters), combo, self.config);
        if let Some(hit) = self.contributions.get(&key) {
            return Ok(hit.clone());
        }
        let result = self.result(combo, job)?;
        let fcs = clusters
            .iter()
            .map(|c| {
                job.checkpoint()?;
                explain_cluster(result.compressed.y.view(), c)
            })
            .collect::<Result<Vec<_>>>()?;
        let fcs = Arc::new(fcs);
        self.contributions.insert(key, fcs.clone());
        Ok(fcs)
    }

    /// Contributions of every current cluster in `combo`.
    pub fn contributions(&mut self, combo: ModeCombo, job: &JobControl) -> Result<Arc<Vec<FeatureContributions>>> {
        let clusters = self.clusters.clone();
        self.compute_contributions(&clusters, combo, job)
    }

    /// Adds a cluster and recomputes contributions for both active
    /// combinations. On error the session is unchanged.
    pub fn select_cluster(
        &mut self,
        point_ids: &[usize],
        label: Option<String>,
        job: &JobControl,
    ) -> Result<ClusterSelection> {
        let points = self.tensor.len(self.point_mode);
        let members: BTreeSet<usize> = point_ids.iter().copied().collect();
        if let Some(&bad) = members.iter().find(|&&p| p >= points) {
            return Err(Error::RowOutOfRange { index: bad, rows: points });
        }
        if members.len() < 2 {
            return Err(Error::InvalidSelection("minimum 2 points".into()));
        }
        if let Some(existing) = self
            .clusters
            .iter()
            .find(|c| !c.member_rows.is_disjoint(&members))
        {
            return Err(Error::InvalidSelection(format!(
                "selection overlaps cluster {}",
                existing.cluster_id
            )));
        }
        let id = self.next_cluster_id;
        let selection = ClusterSelection {
            cluster_id: id,
            member_rows: members,
            color_index: color_slot(id),
            label: label.unwrap_or_else(|| format!("Cluster {id}")),
        };
        let mut candidate = self.clusters.clone();
        candidate.push(selection.clone());
        for combo in self.active_combos() {
            self.compute_contributions(&candidate, combo, job)?;
        }
        self.clusters = candidate;
        self.next_cluster_id += 1;
        Ok(selection)
    }

    pub fn remove_cluster(&mut self, cluster_id: u32, job: &JobControl) -> Result<()> {
        let pos = self
            .clusters
            .iter()
            .position(|c| c.cluster_id == cluster_id)
            .ok_or_else(|| Error::InvalidSelection(format!("no cluster {cluster_id}")))?;
        let mut candidate = self.clusters.clone();
        candidate.remove(pos);
        for combo in self.active_combos() {
            self.compute_contributions(&candidate, combo, job)?;
        }
        self.clusters = candidate;
        Ok(())
    }

    pub fn histograms(&mut self, combo: ModeCombo, feature_index: usize, bins: usize, job: &JobControl) -> Result<HistogramSet> {
        if combo.point_mode() != self.point_mode {
            return Err(Error::InvalidSelection(format!(
                "combination {combo} does not plot the active {} mode",
                self.point_mode
            )));
        }
        let result = self.result(combo, job)?;
        compute_histograms(result.compressed.y.view(), &self.clusters, feature_index, bins)
    }

    pub fn baselines(&self, options: &BaselineOptions, job: &JobControl) -> Result<BaselineReport> {
        compare_baselines(&self.tensor, self.point_mode, &self.config, options, job)
    }

    pub fn to_document(&self) -> SessionDocument {
        SessionDocument {
            dataset: self.dataset.clone(),
            point_mode: self.point_mode,
            config: self.config,
            clusters: self.clusters.clone(),
            next_cluster_id: self.next_cluster_id,
        }
    }

    /// Rebuilds a session from its document, recomputing every result.
    pub fn replay(doc: &SessionDocument, tensor: Tensor3, job: &JobControl) -> Result<Self> {
        let mut session = Session::new(doc.dataset.clone(), tensor, doc.config);
        session.point_mode = doc.point_mode;
        for cluster in &doc.clusters {
            session.next_cluster_id = cluster.cluster_id;
            let ids: Vec<usize> = cluster.member_rows.iter().copied().collect();
            session.select_cluster(&ids, Some(cluster.label.clone()), job)?;
        }
        session.next_cluster_id = session.next_cluster_id.max(doc.next_cluster_id);
        Ok(session)
    }
}
