use std::path::Path;
use std::process::{Command, Output};

use ndarray::Array3;
use tdr_core::dataset::{save_dataset, DataFormat};
use tdr_core::synthetic::random_tensor;
use tdr_core::Tensor3;

fn labels(prefix: &str) -> Vec<String> {
    vec![format!("{prefix}0"), format!("{prefix}1")]
}

/// The 2x2x2 tensor with value `100t + 10n + d`.
fn fixture() -> Tensor3 {
    let values = Array3::from_shape_fn((2, 2, 2), |(t, n, d)| (100 * t + 10 * n + d) as f64);
    Tensor3::new(values, labels("t"), labels("n"), labels("d")).unwrap()
}

fn tdr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdr")).args(args).output().unwrap()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn smallest_pipeline_has_two_points() {
    let dir = tempfile::tempdir().unwrap();
    let desc = save_dataset(dir.path(), "fix", &fixture(), DataFormat::Long).unwrap();
    let out = dir.path().join("out");
    let o = tdr(&[
        "pipeline", "--dataset", desc.to_str().unwrap(), "--first", "variable", "--second", "time",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = read_json(&out.join("fix_variable_time.json"));
    assert_eq!(doc["point_mode"], "instance");
    assert_eq!(doc["embedding"]["z"]["rows"], 2);
    assert_eq!(doc["compressed"]["y"]["rows"], 2);
    assert_eq!(doc["point_labels"], serde_json::json!(["n0", "n1"]));
}

#[test]
fn outputs_are_bit_stable() {
    let dir = tempfile::tempdir().unwrap();
    let desc = save_dataset(dir.path(), "r", &random_tensor([6, 30, 4], 1), DataFormat::Binary).unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = tdr(&["all-combos", "--dataset", desc.to_str().unwrap(), "--seed", "7", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    let mut files: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    assert_eq!(files.len(), 6);
    for f in files {
        assert_eq!(std::fs::read(a.join(&f)).unwrap(), std::fs::read(b.join(&f)).unwrap(), "{f:?}");
    }
}

#[test]
fn compare_reports_flat_feature_count() {
    let dir = tempfile::tempdir().unwrap();
    let desc = save_dataset(dir.path(), "k", &random_tensor([3, 864, 1163], 3), DataFormat::Binary).unwrap();
    let out = dir.path().join("out");
    let o = tdr(&["compare", "--dataset", desc.to_str().unwrap(), "--point-mode", "time", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("UnfoldEmbed: 1004832 features"), "{stdout}");
    let doc = read_json(&out.join("k_baselines_time.json"));
    let flat = doc["entries"].as_array().unwrap().iter().find(|e| e["baseline"] == "unfold_embed").unwrap();
    assert_eq!(flat["feature_count"], 1_004_832);
}

#[test]
fn explain_writes_contributions() {
    let dir = tempfile::tempdir().unwrap();
    let desc = save_dataset(dir.path(), "e", &random_tensor([8, 20, 5], 4), DataFormat::Long).unwrap();
    let clusters = dir.path().join("c.txt");
    std::fs::write(&clusters, "# row cluster\n0 1\n1 1\n2 1\n10 2\n11 2\n").unwrap();
    let out = dir.path().join("out");
    let o = tdr(&[
        "explain", "--dataset", desc.to_str().unwrap(), "--first", "time", "--second", "variable",
        "--clusters", clusters.to_str().unwrap(), "--feature", "2", "--bins", "5", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = read_json(&out.join("e_time_variable_contributions.json"));
    let fcs = doc["contributions"].as_array().unwrap();
    assert_eq!(fcs.len(), 2);
    for fc in fcs {
        let a: Vec<f64> = serde_json::from_value(fc["a"].clone()).unwrap();
        assert_eq!(a.len(), 5);
        assert_eq!(a.iter().fold(0.0f64, |m, v| m.max(v.abs())), 1.0);
    }
    assert_eq!(doc["histograms"]["groups"].as_array().unwrap().len(), 3);
}

#[test]
fn explain_rejects_bad_row_index() {
    let dir = tempfile::tempdir().unwrap();
    let desc = save_dataset(dir.path(), "e", &random_tensor([4, 6, 3], 5), DataFormat::Long).unwrap();
    let clusters = dir.path().join("c.txt");
    std::fs::write(&clusters, "0 1\n1 1\n17 1\n").unwrap();
    let o = tdr(&[
        "explain", "--dataset", desc.to_str().unwrap(), "--first", "time", "--second", "variable",
        "--clusters", clusters.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("row index 17"), "{stderr}");
}

#[test]
fn bad_descriptor_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let desc = dir.path().join("bad.json");
    std::fs::write(&desc, "{\"name\": \"bad\"}").unwrap();
    let o = tdr(&["all-combos", "--dataset", desc.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    let o = tdr(&["pipeline", "--dataset", desc.to_str().unwrap(), "--first", "time", "--second", "time"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3() {
    // A constant tensor leaves nothing for the eigensolver to find.
    let dir = tempfile::tempdir().unwrap();
    let t = Tensor3::new(Array3::from_elem((2, 2, 2), 1.0), labels("t"), labels("n"), labels("d")).unwrap();
    let desc = save_dataset(dir.path(), "flat", &t, DataFormat::Long).unwrap();
    let out = dir.path().join("out");
    let o = tdr(&[
        "pipeline", "--dataset", desc.to_str().unwrap(), "--first", "variable", "--second", "time",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
