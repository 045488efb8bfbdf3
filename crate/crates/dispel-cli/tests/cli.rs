//! End-to-end checks of the `dispel` binary against the committed configs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn dispel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dispel"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// A fast-config copy of the haberman experiment so CLI tests stay quick.
fn quick_config(dir: &Path) -> PathBuf {
    let csv = std::fs::read_to_string(data_dir().join("haberman_surrogate.csv")).unwrap();
    std::fs::write(dir.join("haberman_surrogate.csv"), csv).unwrap();
    let config = r#"
config_version = 1

[dataset]
path = "haberman_surrogate.csv"
label_column = 4

[reduction]
method = "pca"

[knn]
k = 5

[protocol]
folds = 4
repeats = 1
seed = 9

[search]
strategy = "grid"
alpha_min = -2
alpha_max = 6
seed = 9

[noise]
fraction = 0.05
magnitude = 0.5
seed = 3
"#;
    let path = dir.join("quick.toml");
    std::fs::write(&path, config).unwrap();
    path
}

#[test]
fn compare_produces_report_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_config(dir.path());
    let out_path = dir.path().join("report.json");
    let out = dispel(&[
        "compare",
        "--config",
        config.to_str().unwrap(),
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    let baseline = report["baseline"]["mean"].as_f64().unwrap();
    let dcg = report["dcg"]["mean"].as_f64().unwrap();
    assert!(dcg >= baseline);
}

#[test]
fn compare_is_reproducible_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_config(dir.path());
    let a_path = dir.path().join("a.json");
    let b_path = dir.path().join("b.json");
    for p in [&a_path, &b_path] {
        let out = dispel(&[
            "compare",
            "--config",
            config.to_str().unwrap(),
            "--output",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let mut a: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&a_path).unwrap()).unwrap();
    let mut b: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&b_path).unwrap()).unwrap();
    a["metadata"]["unix_timestamp"] = 0.into();
    b["metadata"]["unix_timestamp"] = 0.into();
    assert_eq!(a, b);
}

#[test]
fn sweep_emits_table_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_config(dir.path());
    let out = dispel(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--alpha-min",
        "0",
        "--alpha-max",
        "3",
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.trim().lines().collect();
    assert_eq!(lines[0], "alpha,accuracy_percent");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0,"));
}

#[test]
fn sweep_output_is_bit_stable() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_config(dir.path());
    let run = || {
        let out = dispel(&[
            "sweep",
            "--config",
            config.to_str().unwrap(),
            "--alpha-min",
            "0",
            "--alpha-max",
            "4",
        ]);
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn noise_reports_paired_drops() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_config(dir.path());
    let out = dispel(&[
        "noise",
        "--config",
        config.to_str().unwrap(),
        "--level",
        "0.0:1.0:5",
    ]);
    assert!(out.status.success());
    let study: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stdout).trim()).unwrap();
    assert_eq!(study["levels"][0]["baseline_drop"], 0.0);
    assert_eq!(study["levels"][0]["dcg_drop"], 0.0);
}

#[test]
fn lpmr_scan_flags_problem_alphas() {
    let dir = tempfile::tempdir().unwrap();
    // Two scalar points: problem-maker range over [1, 4] is {1, 2, 3}.
    std::fs::write(dir.path().join("pair.csv"), "5,1\n7,2\n").unwrap();
    let config = r#"
config_version = 1

[dataset]
path = "pair.csv"
label_column = 2

[reduction]
method = "pca"

[knn]
k = 1

[protocol]
folds = 2
repeats = 1
seed = 1

[search]
strategy = "grid"
alpha_min = 1
alpha_max = 4
"#;
    let config_path = dir.path().join("pair.toml");
    std::fs::write(&config_path, config).unwrap();
    let out = dispel(&["lpmr", "--config", config_path.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    let below: Vec<i64> = stdout
        .trim()
        .lines()
        .skip(1)
        .filter(|l| l.ends_with("true"))
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(below, vec![1, 2, 3]);
}

#[test]
fn missing_config_exits_with_data_error() {
    let out = dispel(&["compare", "--config", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_config_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "config_version = 99\n").unwrap();
    let out = dispel(&["compare", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_flag_exits_with_config_error() {
    let out = dispel(&["compare", "--definitely-not-a-flag"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn committed_configs_parse_and_run_lpmr() {
    for name in ["haberman", "breast_cancer", "glass", "lung_cancer"] {
        let config = data_dir().join(format!("{name}.toml"));
        let out = dispel(&[
            "lpmr",
            "--config",
            config.to_str().unwrap(),
            "--alpha-min",
            "1",
            "--alpha-max",
            "3",
        ]);
        assert!(
            out.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn compare_dumps_auditable_model() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_config(dir.path());
    let model_path = dir.path().join("model.txt");
    let out = dispel(&[
        "compare",
        "--config",
        config.to_str().unwrap(),
        "--output",
        dir.path().join("r.json").to_str().unwrap(),
        "--dump-model",
        model_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&model_path).unwrap();
    assert!(text.starts_with("dispel-projection v1\n"));
    assert!(text.contains("method pca"));
    assert!(text.contains("in_dim 3"));
}

#[test]
fn strategy_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_config(dir.path());
    let out_path = dir.path().join("hc.json");
    let out = dispel(&[
        "compare",
        "--config",
        config.to_str().unwrap(),
        "--strategy",
        "hill-climb",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["metadata"]["search_strategy"], "hill_climb");
    assert_eq!(report["dcg_params"]["origin"], "hill_climb");
}
