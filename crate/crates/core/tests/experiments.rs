use std::fs;

use rbm_lattice::experiment::{run_experiment_in, validate_config, RunStatus};
use rbm_lattice::grid::GridExport;

fn config(experiments: &str, levels: &str, extra: &str) -> String {
    format!(
        r#"{{
            "domain": {{"name": "rectangle"}},
            "levels": {levels},
            "walk": {{"seed": 7, "replicas": 200, "horizon": 0.2}},
            "experiments": {experiments},
            "testFunctions": ["x1", "sinx1cosx2"]{extra}
        }}"#
    )
}

#[test]
fn build_grid_writes_nine_vertex_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = validate_config(&config(r#"["buildGrid"]"#, "[2]", "")).unwrap();
    let manifest = run_experiment_in(&cfg, dir.path()).unwrap();
    assert_eq!(manifest.runs[0].status, RunStatus::Ok);
    let grid: GridExport =
        serde_json::from_str(&fs::read_to_string(dir.path().join("grid-k2.json")).unwrap()).unwrap();
    assert_eq!(grid.vertices.len(), 9);
    assert_eq!(grid.edges.len(), 12);
}

#[test]
fn every_experiment_runs_and_lists_its_files() {
    let dir = tempfile::tempdir().unwrap();
    let raw = config(
        r#"["buildGrid", "energy", "spectrumCheck", "marginal", "occupation", "crevice", "exitTime"]"#,
        "[3, 4]",
        r#", "exitTime": {"halfWidth": 0.25}, "marginal": {"time": 0.05, "bins": 8}"#,
    );
    let cfg = validate_config(&raw).unwrap();
    let manifest = run_experiment_in(&cfg, dir.path()).unwrap();
    assert_eq!(manifest.failures(), 0, "{:?}", manifest.runs);
    let mut on_disk: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    on_disk.sort();
    let mut listed: Vec<String> = manifest.files.iter().map(|f| f.path.clone()).collect();
    listed.sort();
    assert_eq!(on_disk, listed, "no orphan or missing files");
    assert!(listed.iter().all(|p| p.starts_with("grid-") || p.starts_with("report-")));
}

#[test]
fn identical_configs_give_identical_outputs_across_worker_counts() {
    let raw = config(r#"["marginal", "occupation", "spectrumCheck"]"#, "[3]", "");
    let one = validate_config(&raw.replace("\"levels\"", "\"workers\": 1, \"levels\"")).unwrap();
    let two = validate_config(&raw.replace("\"levels\"", "\"workers\": 2, \"levels\"")).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment_in(&one, a.path()).unwrap();
    run_experiment_in(&two, b.path()).unwrap();
    for entry in fs::read_dir(a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(
            fs::read(a.path().join(&name)).unwrap(),
            fs::read(b.path().join(&name)).unwrap(),
            "{name:?} differs"
        );
    }
}

#[test]
fn empty_grid_is_recorded_and_the_run_continues() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = validate_config(&config(r#"["buildGrid"]"#, "[1, 2]", "")).unwrap();
    let manifest = run_experiment_in(&cfg, dir.path()).unwrap();
    assert_eq!(manifest.runs[0].status, RunStatus::EmptyGrid);
    assert_eq!(manifest.runs[1].status, RunStatus::Ok);
}

#[test]
fn unreachable_exit_box_fails_without_stopping_other_runs() {
    let dir = tempfile::tempdir().unwrap();
    let raw = config(r#"["exitTime", "buildGrid"]"#, "[3]", r#", "exitTime": {"halfWidth": 0.5}"#);
    let cfg = validate_config(&raw).unwrap();
    let manifest = run_experiment_in(&cfg, dir.path()).unwrap();
    assert_eq!(manifest.runs[0].status, RunStatus::Failed);
    assert_eq!(manifest.runs[1].status, RunStatus::Ok);
    assert_eq!(manifest.failures(), 1);
}
