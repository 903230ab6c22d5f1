//! End-to-end tests of the `ensemblepool` binary: file formats, error
//! contracts, and command determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ensemblepool"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_ok(output: &Output) {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }

    fn write(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.path().join(name);
        fs::write(&path, contents).unwrap();
        path
    }

    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.path().join(name)).unwrap()
    }
}

/// 40 samples, 2 classes, balanced.
fn labels_csv(n: usize) -> String {
    let mut out = String::from("sample_id,label\n");
    for i in 0..n {
        out.push_str(&format!("s{i:03},{}\n", i % 2));
    }
    out
}

fn two_member_manifest(ws: &Workspace) {
    let n = 40;
    ws.write("labels.csv", &labels_csv(n));
    let mut m0 = String::from("sample_id,a,b\n");
    let mut m1 = String::from("sample_id,a,b\n");
    for i in 0..n {
        let (p0, p1) = if i % 2 == 0 { (0.8, 0.2) } else { (0.3, 0.7) };
        m0.push_str(&format!("s{i:03},{p0},{p1}\n"));
        let (q0, q1) = if i % 2 == 0 { (0.6, 0.4) } else { (0.1, 0.9) };
        m1.push_str(&format!("s{i:03},{q0},{q1}\n"));
    }
    ws.write("m0.csv", &m0);
    ws.write("m1.csv", &m1);
    ws.write(
        "manifest.json",
        r#"{"schema_version":1,"class_names":["a","b"],"labels":"labels.csv",
            "members":[{"name":"m0","source_kind":"architecture","path":"m0.csv"},
                       {"name":"m1","source_kind":"architecture","path":"m1.csv"}]}"#,
    );
}

#[test]
fn split_writes_json_and_prints_counts() {
    let ws = Workspace::new();
    ws.write("labels.csv", &labels_csv(40));
    let out = run(
        &["split", "labels.csv", "--out", "split.json", "--seed", "3"],
        ws.path(),
    );
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("model-train"));
    assert!(stdout.contains("testing"));
    let doc: serde_json::Value = serde_json::from_str(&ws.read("split.json")).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert!(doc["assignment"].is_object());
}

#[test]
fn split_kfold_writes_fold_array() {
    let ws = Workspace::new();
    ws.write("labels.csv", &labels_csv(60));
    let out = run(
        &["split", "labels.csv", "--out", "split.json", "--kfold", "5"],
        ws.path(),
    );
    assert_ok(&out);
    let doc: serde_json::Value = serde_json::from_str(&ws.read("split.json")).unwrap();
    assert_eq!(doc["folds"].as_array().unwrap().len(), 5);
}

#[test]
fn split_rejects_malformed_row_naming_the_line() {
    let ws = Workspace::new();
    ws.write("labels.csv", "sample_id,label\ns000,0\ns001,zebra\ns002,1\n");
    let out = run(&["split", "labels.csv", "--out", "split.json"], ws.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3"), "stderr: {stderr}");
    assert!(stderr.contains("zebra"));
}

#[test]
fn pool_mean_unweighted_averages_rowwise() {
    let ws = Workspace::new();
    two_member_manifest(&ws);
    let out = run(
        &["pool", "manifest.json", "--pooler", "mean-unweighted", "--out", "mean.csv"],
        ws.path(),
    );
    assert_ok(&out);
    let text = ws.read("mean.csv");
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "sample_id,a,b");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "s000");
    let p0: f64 = first[1].parse().unwrap();
    assert!((p0 - 0.7).abs() < 1e-9); // (0.8 + 0.6) / 2
}

#[test]
fn pool_fitted_kind_requires_fit_split() {
    let ws = Workspace::new();
    two_member_manifest(&ws);
    let out = run(
        &["pool", "manifest.json", "--pooler", "logistic-regression", "--out", "lr.csv"],
        ws.path(),
    );
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--fit-split"), "stderr: {stderr}");
}

#[test]
fn pool_best_model_copies_a_member_file() {
    let ws = Workspace::new();
    two_member_manifest(&ws);
    assert_ok(&run(
        &["split", "labels.csv", "--out", "split.json", "--seed", "1"],
        ws.path(),
    ));
    let out = run(
        &[
            "pool",
            "manifest.json",
            "--pooler",
            "best-model",
            "--fit-split",
            "split.json",
            "--out",
            "best.csv",
        ],
        ws.path(),
    );
    assert_ok(&out);
    // Output equals one of the member files modulo float formatting.
    let parse = |text: &str| -> Vec<Vec<f64>> {
        text.lines()
            .skip(1)
            .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
            .collect()
    };
    let best = parse(&ws.read("best.csv"));
    let m0 = parse(&ws.read("m0.csv"));
    let m1 = parse(&ws.read("m1.csv"));
    let close = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| {
        a.iter()
            .zip(b)
            .all(|(ra, rb)| ra.iter().zip(rb).all(|(x, y)| (x - y).abs() < 1e-9))
    };
    assert!(close(&best, &m0) || close(&best, &m1));
    // The fitted pooler document is written alongside.
    let pooler: serde_json::Value = serde_json::from_str(&ws.read("best.pooler.json")).unwrap();
    assert_eq!(pooler["schema_version"], 1);
    assert_eq!(pooler["pooler"]["kind"], "best-model");
}

#[test]
fn evaluate_perfect_predictions() {
    let ws = Workspace::new();
    ws.write("labels.csv", &labels_csv(20));
    let mut preds = String::from("sample_id,a,b\n");
    for i in 0..20 {
        let (p0, p1) = if i % 2 == 0 { (0.9, 0.1) } else { (0.1, 0.9) };
        preds.push_str(&format!("s{i:03},{p0},{p1}\n"));
    }
    ws.write("preds.csv", &preds);
    let out = run(
        &["evaluate", "preds.csv", "labels.csv", "--out", "report.json"],
        ws.path(),
    );
    assert_ok(&out);
    let report: serde_json::Value = serde_json::from_str(&ws.read("report.json")).unwrap();
    assert_eq!(report["macro"]["f1"], 1.0);
    assert_eq!(report["top1_error"], 0.0);
}

#[test]
fn evaluate_metrics_fixture_values() {
    let ws = Workspace::new();
    // Class-0 one-vs-rest counts TP=2, FP=1, TN=5, FN=2.
    let truth = [0, 0, 0, 0, 1, 1, 1, 1, 1, 1];
    let preds = [0, 0, 1, 1, 0, 1, 1, 1, 1, 1];
    let mut labels = String::from("sample_id,label\n");
    let mut rows = String::from("sample_id,a,b\n");
    for (i, (&t, &p)) in truth.iter().zip(&preds).enumerate() {
        labels.push_str(&format!("s{i},{t}\n"));
        let (p0, p1) = if p == 0 { (0.9, 0.1) } else { (0.1, 0.9) };
        rows.push_str(&format!("s{i},{p0},{p1}\n"));
    }
    ws.write("labels.csv", &labels);
    ws.write("preds.csv", &rows);
    let out = run(
        &[
            "evaluate", "preds.csv", "labels.csv", "--out", "report.json", "--roc-dir", "roc",
        ],
        ws.path(),
    );
    assert_ok(&out);
    let report: serde_json::Value = serde_json::from_str(&ws.read("report.json")).unwrap();
    let class0 = &report["per_class"][0];
    assert!((class0["accuracy"].as_f64().unwrap() - 0.7).abs() < 1e-12);
    assert!((class0["f1"].as_f64().unwrap() - 4.0 / 7.0).abs() < 1e-12);
    assert!((class0["sensitivity"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((class0["fpr"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);
    let roc = ws.read("roc/class_0_roc.csv");
    assert!(roc.starts_with("threshold,fpr,tpr\n"));
}

#[test]
fn evaluate_single_class_labels_reports_degenerate() {
    let ws = Workspace::new();
    let mut labels = String::from("sample_id,label\n");
    let mut preds = String::from("sample_id,a,b\n");
    for i in 0..6 {
        labels.push_str(&format!("s{i},0\n"));
        preds.push_str(&format!("s{i},0.8,0.2\n"));
    }
    ws.write("labels.csv", &labels);
    ws.write("preds.csv", &preds);
    let out = run(
        &["evaluate", "preds.csv", "labels.csv", "--out", "report.json"],
        ws.path(),
    );
    assert_ok(&out);
    let report: serde_json::Value = serde_json::from_str(&ws.read("report.json")).unwrap();
    assert!(report["per_class"][0]["auc"].is_null());
    assert_eq!(report["per_class"][1]["degenerate"], true);
    assert!(report["macro"]["auc"].is_null());
}

fn experiment_config(scenario: &str, poolers: &str) -> String {
    format!(
        r#"{{
  "scenario": "{scenario}",
  "dataset": {{"n_samples": 240, "n_classes": 3, "n_features": 5,
               "class_separation": 4.0, "label_noise": 0.05, "seed": 11}},
  "split": {{"seed": 2, "stratified": true}},
  "learners": [
    {{"member_name": "m0", "feature_subset_fraction": 0.6, "init_seed": 1,
      "learning_rate": 1.0, "max_epochs": 120, "patience": 10}},
    {{"member_name": "m1", "feature_subset_fraction": 0.6, "init_seed": 2,
      "learning_rate": 1.0, "max_epochs": 120, "patience": 10}}
  ],
  "poolers": [{poolers}],
  "kfold": {{"k": 3, "seed": 4}},
  "augment": {{"copies": 3, "jitter_sigma": 0.05, "seed": 6}}
}}"#
    )
}

#[test]
fn experiment_reports_one_entry_per_pooler() {
    let ws = Workspace::new();
    ws.write(
        "config.json",
        &experiment_config(
            "stacking",
            r#""mean-unweighted", "mean-weighted", "majority-vote-hard", "global-argmax""#,
        ),
    );
    let out = run(
        &["experiment", "config.json", "--out", "report.json", "--table"],
        ws.path(),
    );
    assert_ok(&out);
    let report: serde_json::Value = serde_json::from_str(&ws.read("report.json")).unwrap();
    assert_eq!(report["methods"].as_array().unwrap().len(), 4);
    assert_eq!(report["deltas"].as_array().unwrap().len(), 4);
}

#[test]
fn experiment_baseline_only_has_empty_deltas() {
    let ws = Workspace::new();
    ws.write("config.json", &experiment_config("baseline", ""));
    let out = run(
        &["experiment", "config.json", "--out", "report.json"],
        ws.path(),
    );
    assert_ok(&out);
    let report: serde_json::Value = serde_json::from_str(&ws.read("report.json")).unwrap();
    assert_eq!(report["deltas"].as_array().unwrap().len(), 0);
    assert_eq!(report["methods"].as_array().unwrap().len(), 0);
    assert_eq!(report["baseline"].as_array().unwrap().len(), 2);
}

#[test]
fn experiment_is_byte_deterministic() {
    let ws = Workspace::new();
    ws.write(
        "config.json",
        &experiment_config("bagging", r#""mean-unweighted""#),
    );
    assert_ok(&run(
        &["experiment", "config.json", "--out", "a.json"],
        ws.path(),
    ));
    assert_ok(&run(
        &["experiment", "config.json", "--out", "b.json"],
        ws.path(),
    ));
    let a = fs::read(ws.path().join("a.json")).unwrap();
    let b = fs::read(ws.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn experiment_accepts_toml() {
    let ws = Workspace::new();
    ws.write(
        "config.toml",
        r#"
scenario = "baseline"
gamma = 2.0

[dataset]
n_samples = 120
n_classes = 2
n_features = 4
class_separation = 5.0
label_noise = 0.0
seed = 3

[split]
seed = 9
stratified = true

[[learners]]
member_name = "only"
feature_subset_fraction = 1.0
init_seed = 5
learning_rate = 1.0
max_epochs = 80
patience = 10
"#,
    );
    let out = run(
        &["experiment", "config.toml", "--out", "report.json"],
        ws.path(),
    );
    assert_ok(&out);
    let report: serde_json::Value = serde_json::from_str(&ws.read("report.json")).unwrap();
    assert_eq!(report["baseline"].as_array().unwrap().len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Parse -> serialize -> parse is the identity at 10-significant-digit
    /// formatting.
    #[test]
    fn predictions_csv_roundtrip(raw in proptest::collection::vec(
        proptest::collection::vec(0.01f64..1.0, 3),
        1..12,
    )) {
        let ws = Workspace::new();
        let mut text = String::from("sample_id,x,y,z\n");
        for (i, row) in raw.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            let cells: Vec<String> = row.iter().map(|v| format!("{:.10}", v / sum)).collect();
            text.push_str(&format!("r{i},{}\n", cells.join(",")));
        }
        ws.write("in.csv", &text);
        let mut label_text = String::from("sample_id,label\n");
        for i in 0..raw.len() {
            label_text.push_str(&format!("r{i},{}\n", i % 3));
        }
        ws.write("labels.csv", &label_text);
        ws.write(
            "manifest.json",
            r#"{"schema_version":1,"class_names":["x","y","z"],
                "members":[{"name":"m","path":"in.csv"}]}"#,
        );
        // Pooling a single member through the unweighted mean is the
        // identity, so this exercises parse -> serialize.
        assert_ok(&run(
            &["pool", "manifest.json", "--pooler", "mean-unweighted", "--out", "out1.csv"],
            ws.path(),
        ));
        ws.write(
            "manifest2.json",
            r#"{"schema_version":1,"class_names":["x","y","z"],
                "members":[{"name":"m","path":"out1.csv"}]}"#,
        );
        assert_ok(&run(
            &["pool", "manifest2.json", "--pooler", "mean-unweighted", "--out", "out2.csv"],
            ws.path(),
        ));
        let first = ws.read("out1.csv");
        let second = ws.read("out2.csv");
        prop_assert_eq!(first, second);
    }
}
