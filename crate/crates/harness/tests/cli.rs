use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn cascade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cascade")).args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn generate(dir: &Path, fixture: &str, seed: &str) {
    let out = cascade(&[
        "generate",
        "--fixture",
        fixture,
        "--seed",
        seed,
        "--traces-per-class",
        "40",
        "--horizon",
        "60",
        "--out",
        &dir.to_string_lossy(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
}

fn decisions(csv: &Path) -> Vec<String> {
    let mut reader = csv::Reader::from_path(csv).unwrap();
    let col = reader.headers().unwrap().iter().position(|h| h == "decision").unwrap();
    reader.records().map(|r| r.unwrap()[col].to_string()).collect()
}

#[test]
fn zero_horizon_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let out =
        cascade(&["generate", "--fixture", "ab", "--seed", "1", "--horizon", "0", "--out", &path(dir.path(), "g")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("horizon must be ≥ 1"), "{}", stderr(&out));
}

#[test]
fn missing_seed_and_double_model_source_are_rejected() {
    let dir = TempDir::new().unwrap();
    let out = cascade(&["generate", "--fixture", "ab", "--out", &path(dir.path(), "g")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("seed is required"), "{}", stderr(&out));

    let model = path(dir.path(), "model.json");
    std::fs::write(&model, "{}").unwrap();
    let out =
        cascade(&["generate", "--fixture", "ab", "--model", &model, "--seed", "1", "--out", &path(dir.path(), "g")]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn unknown_theorem_is_rejected() {
    let dir = TempDir::new().unwrap();
    let out =
        cascade(&["verify", "--fixture", "ab", "--seed", "1", "--theorem", "nope", "--out", &path(dir.path(), "v")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn error_bounds_pass_on_three_hypotheses() {
    let dir = TempDir::new().unwrap();
    let out = cascade(&[
        "verify",
        "--fixture",
        "three",
        "--seed",
        "5",
        "--theorem",
        "error-bounds",
        "--trials",
        "300",
        "--out",
        &path(dir.path(), "v"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("v/report.json")).unwrap()).unwrap();
    assert!(report.get("checks").is_some());
    assert!(dir.path().join("v/manifest.json").exists());
}

#[test]
fn short_aep_run_fails_the_check() {
    let dir = TempDir::new().unwrap();
    let out = cascade(&[
        "verify",
        "--fixture",
        "ab",
        "--seed",
        "1",
        "--theorem",
        "aep",
        "--length",
        "50",
        "--out",
        &path(dir.path(), "v"),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("FAIL aep"), "{}", stderr(&out));
}

#[test]
fn oracle_gnn_and_msprt_make_the_same_decisions() {
    let dir = TempDir::new().unwrap();
    generate(&dir.path().join("g"), "three", "3");
    let traces = path(dir.path(), "g/traces.jsonl");
    for (rule, sub) in [("msprt", "m"), ("gnn", "n")] {
        let out = cascade(&[
            "run",
            "--fixture",
            "three",
            "--traces",
            &traces,
            "--rule",
            rule,
            "--scorer",
            "oracle",
            "--thresholds",
            "0.05",
            "--out",
            &path(dir.path(), sub),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let m = decisions(&dir.path().join("m/outcomes.csv"));
    assert_eq!(m.len(), 120);
    assert_eq!(m, decisions(&dir.path().join("n/outcomes.csv")));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    generate(&dir.path().join("a"), "ab", "9");
    generate(&dir.path().join("b"), "ab", "9");
    for name in ["traces.jsonl", "traces.csv", "manifest.json"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert!(a == b, "{name} differs");
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let config = path(dir.path(), "config.json");
    std::fs::write(&config, r#"{"fixture": "ab", "seed": 4, "traces_per_class": 5, "horizon": 10}"#).unwrap();
    let out = cascade(&["generate", "--config", &config, "--horizon", "12", "--out", &path(dir.path(), "g")]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("g/traces.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 10);
    assert!(lines.iter().all(|t| t["events"].as_array().unwrap().len() == 12));

    std::fs::write(&config, r#"{"fixture": "ab", "sed": 4}"#).unwrap();
    let out = cascade(&["generate", "--config", &config, "--out", &path(dir.path(), "h")]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn fitted_model_drives_a_run() {
    let dir = TempDir::new().unwrap();
    generate(&dir.path().join("g"), "ab", "21");
    let traces = path(dir.path(), "g/traces.jsonl");
    let out = cascade(&["fit", "--traces", &traces, "--classifier", "identity", "--out", &path(dir.path(), "f")]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("f/fit.json").exists());
    let model = path(dir.path(), "f/model.json");
    let out = cascade(&["run", "--model", &model, "--traces", &traces, "--out", &path(dir.path(), "r")]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(decisions(&dir.path().join("r/outcomes.csv")).len(), 80);
}
