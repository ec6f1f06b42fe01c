//! Batch subcommands. Each writes JSON documents under `--out` and prints a
//! one-line summary per file.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use tdr_core::contrastive::{explain_cluster, ClusterSelection};
use tdr_core::dataset::{load_dataset, save_dataset, DataFormat};
use tdr_core::report::{AnalysisDoc, BaselineDoc};
use tdr_core::session::{color_slot, compare_baselines, compute_histograms, BaselineOptions, PipelineConfig};
use tdr_core::synthetic::random_tensor;
use tdr_core::{run_pipeline, Dataset, Error, JobControl, Mode, ModeCombo};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, descriptors, or data files.
    Input(String),
    /// The numerics failed on valid input.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

pub type CliResult<T> = Result<T, CliError>;

pub fn open_dataset(path: &Path) -> CliResult<Dataset> {
    load_dataset(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_json(out: &Path, file: &str, value: &serde_json::Value) -> CliResult<PathBuf> {
    fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
    let path = out.join(file);
    let text = serde_json::to_string_pretty(value).expect("documents serialize");
    fs::write(&path, text).map_err(|e| io_error(&path, e))?;
    Ok(path)
}

fn combo_stem(name: &str, combo: ModeCombo) -> String {
    format!("{name}_{}_{}", combo.first(), combo.second())
}

pub fn pipeline(dataset: &Path, combo: ModeCombo, config: &PipelineConfig, out: &Path) -> CliResult<()> {
    let ds = open_dataset(dataset)?;
    run_and_write(&ds, combo, config, out)
}

fn run_and_write(ds: &Dataset, combo: ModeCombo, config: &PipelineConfig, out: &Path) -> CliResult<()> {
    let r = run_pipeline(&ds.tensor, combo, config, &JobControl::new())?;
    let doc = AnalysisDoc::new(&ds.name, &ds.tensor, &r);
    let path = write_json(out, &format!("{}.json", combo_stem(&ds.name, combo)), &json!(doc))?;
    let trust = r
        .trustworthiness
        .map(|(k, t)| format!(", trustworthiness(k={k}) {t:.4}"))
        .unwrap_or_default();
    println!(
        "{combo}: {} points, quality {:.4}{trust} -> {}",
        r.embedding.z.nrows(),
        r.compressed.quality,
        path.display()
    );
    Ok(())
}

pub fn all_combos(dataset: &Path, config: &PipelineConfig, out: &Path) -> CliResult<()> {
    let ds = open_dataset(dataset)?;
    for combo in ModeCombo::all() {
        run_and_write(&ds, combo, config, out)?;
    }
    Ok(())
}

/// Parses `<row> <cluster_id>` lines; blank lines and `#` comments are
/// skipped.
pub fn parse_cluster_file(text: &str) -> CliResult<BTreeMap<u32, Vec<usize>>> {
    let mut clusters: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parsed = match fields.as_slice() {
            [row, id] => row.parse::<usize>().ok().zip(id.parse::<u32>().ok()),
            _ => None,
        };
        let (row, id) = parsed.ok_or_else(|| {
            CliError::Input(format!("cluster file line {}: expected '<row> <cluster_id>', got '{line}'", n + 1))
        })?;
        clusters.entry(id).or_default().push(row);
    }
    if clusters.is_empty() {
        return Err(CliError::Input("cluster file lists no rows".into()));
    }
    Ok(clusters)
}

pub fn explain(
    dataset: &Path,
    combo: ModeCombo,
    config: &PipelineConfig,
    clusters_file: &Path,
    feature: Option<usize>,
    bins: usize,
    out: &Path,
) -> CliResult<()> {
    let ds = open_dataset(dataset)?;
    let text = fs::read_to_string(clusters_file).map_err(|e| io_error(clusters_file, e))?;
    let groups = parse_cluster_file(&text)?;
    let points = ds.tensor.len(combo.point_mode());
    let mut seen = BTreeMap::new();
    let mut selections = Vec::new();
    for (&id, rows) in &groups {
        for &row in rows {
            if row >= points {
                return Err(Error::RowOutOfRange { index: row, rows: points }.into());
            }
            if let Some(other) = seen.insert(row, id) {
                return Err(CliError::Input(format!("row {row} is in clusters {other} and {id}")));
            }
        }
        selections.push(ClusterSelection {
            cluster_id: id,
            member_rows: rows.iter().copied().collect(),
            color_index: color_slot(id),
            label: format!("Cluster {id}"),
        });
    }

    let r = run_pipeline(&ds.tensor, combo, config, &JobControl::new())?;
    let y = r.compressed.y.view();
    let contributions = selections
        .iter()
        .map(|s| explain_cluster(y, s))
        .collect::<Result<Vec<_>, _>>()?;
    let histograms = match feature {
        Some(j) => Some(compute_histograms(y, &selections, j, bins)?),
        None => None,
    };
    let doc = json!({
        "dataset": ds.name,
        "combo": combo,
        "feature_labels": ds.tensor.labels(combo.second()),
        "clusters": selections,
        "contributions": contributions,
        "histograms": histograms,
    });
    let path = write_json(out, &format!("{}_contributions.json", combo_stem(&ds.name, combo)), &doc)?;
    for fc in &contributions {
        let (top, value) = fc
            .a
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(j, v)| (j, *v))
            .unwrap_or((0, 0.0));
        println!(
            "cluster {}: alpha {:.3}, top feature {} ({:+.3}){}",
            fc.cluster_id,
            fc.alpha,
            ds.tensor.labels(combo.second())[top],
            value,
            fc.warning.map(|w| format!(", warning {w:?}")).unwrap_or_default()
        );
    }
    println!("contributions -> {}", path.display());
    Ok(())
}

fn read_labels(path: &Path, expected: usize) -> CliResult<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let labels = text
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| CliError::Input(format!("{}: bad label '{t}'", path.display()))))
        .collect::<CliResult<Vec<_>>>()?;
    if labels.len() != expected {
        return Err(CliError::Input(format!(
            "{}: {} labels for {expected} points",
            path.display(),
            labels.len()
        )));
    }
    Ok(labels)
}

pub fn compare(
    dataset: &Path,
    point_mode: Mode,
    first: Option<Mode>,
    config: &PipelineConfig,
    labels: Option<&Path>,
    out: &Path,
) -> CliResult<()> {
    let ds = open_dataset(dataset)?;
    let labels = labels
        .map(|p| read_labels(p, ds.tensor.len(point_mode)))
        .transpose()?;
    let options = BaselineOptions {
        first,
        labels,
        column_cap: None,
    };
    let report = compare_baselines(&ds.tensor, point_mode, config, &options, &JobControl::new())?;
    let doc = BaselineDoc::new(&ds.name, &report);
    let path = write_json(out, &format!("{}_baselines_{point_mode}.json", ds.name), &json!(doc))?;
    for e in &report.entries {
        let purity = e.purity.map(|p| format!(", purity {p:.3}")).unwrap_or_default();
        let trust = e
            .trustworthiness
            .map(|(k, t)| format!(", trustworthiness(k={k}) {t:.4}"))
            .unwrap_or_default();
        println!("{:?}: {} features{purity}{trust}", e.baseline, e.feature_count);
    }
    println!("baselines -> {}", path.display());
    Ok(())
}

pub fn generate(dims: [usize; 3], seed: u64, name: &str, format: DataFormat, out: &Path) -> CliResult<()> {
    let t = random_tensor(dims, seed);
    fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
    let path = save_dataset(out, name, &t, format)?;
    println!("{}x{}x{} dataset -> {}", dims[0], dims[1], dims[2], path.display());
    Ok(())
}
