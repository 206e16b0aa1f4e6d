use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rbm-lattice"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

fn run(dir: &Path, config: &Path, out: &str) -> Output {
    bin()
        .arg("run")
        .arg(config)
        .arg("--output")
        .arg(dir.join(out))
        .output()
        .unwrap()
}

const GRID_CONFIG: &str = r#"{
    "domain": {"name": "rectangle"},
    "levels": [2],
    "walk": {"seed": 1},
    "experiments": ["buildGrid"]
}"#;

#[test]
fn run_writes_grid_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), GRID_CONFIG);
    let out = run(dir.path(), &config, "out");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let grid: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/grid-k2.json")).unwrap()).unwrap();
    assert_eq!(grid["vertices"].as_array().unwrap().len(), 9);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["files"][0]["path"], "grid-k2.json");
    assert_eq!(manifest["config"]["c1"], 0.5);
}

#[test]
fn repeated_runs_give_identical_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{
            "domain": {"name": "rectangle", "lower": [0], "upper": [1]},
            "levels": [4],
            "walk": {"seed": 3, "replicas": 500},
            "experiments": ["marginal", "exitTime"]
        }"#,
    );
    assert_eq!(run(dir.path(), &config, "a").status.code(), Some(0));
    assert_eq!(run(dir.path(), &config, "b").status.code(), Some(0));
    assert_eq!(
        fs::read(dir.path().join("a/manifest.json")).unwrap(),
        fs::read(dir.path().join("b/manifest.json")).unwrap()
    );
}

#[test]
fn unknown_experiment_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &GRID_CONFIG.replace("buildGrid", "teleport"));
    let out = run(dir.path(), &config, "out");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("experiments[0]"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn validate_reports_every_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"domain": {"name": "rectangle"}, "levels": [2], "c1": 1.5, "walk": {}, "experiments": ["buildGrid"]}"#,
    );
    let out = bin().arg("validate").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("c1 must lie in (0,1)"));
    assert!(err.contains("walk.seed"));
}

#[test]
fn validate_echoes_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), GRID_CONFIG);
    let out = bin().arg("validate").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let echoed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(echoed["c1"], 0.5);
    assert_eq!(echoed["gridTag"], "cubeBased");
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = bin().arg("validate").arg("/nonexistent/config.json").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{
            "domain": {"name": "rectangle"},
            "levels": [3],
            "walk": {"seed": 1, "replicas": 10},
            "experiments": ["exitTime"],
            "exitTime": {"halfWidth": 0.5}
        }"#,
    );
    let out = run(dir.path(), &config, "out");
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("out/manifest.json").exists());
}

#[test]
fn builtins_lists_domains_in_text_and_json() {
    let text = bin().arg("builtins").output().unwrap();
    let text = String::from_utf8_lossy(&text.stdout);
    assert!(text.contains("comb") && text.contains("kochPrefractal"));
    let json = bin().args(["builtins", "--json"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert!(v["domains"].as_array().unwrap().iter().any(|d| d["name"] == "comb"));
    assert!(v["testFunctions"].as_array().unwrap().len() >= 2);
}
