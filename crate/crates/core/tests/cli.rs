//! Exit-code and output contracts of the command-line surface.

use std::path::Path;
use std::process::Output;

use bearing_eval::datamodel::write_manifest;
use bearing_eval::synthetic;

fn run_cli(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_bearing-eval"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_pu_manifest(dir: &Path) -> String {
    let ds = synthetic::pu_metadata_manifest();
    let path = dir.join("pu.jsonl");
    write_manifest(&ds, &path).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn toy_prints_the_ceiling_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(&[
        "toy",
        "--out",
        dir.path().join("toy").to_str().unwrap(),
        "--bearings",
        "1",
        "--seeds",
        "1",
    ]);
    assert!(out.status.success());
    assert!(
        stdout(&out).contains("theoretical maximum accuracy: 0.9030"),
        "{}",
        stdout(&out)
    );
    // filtering to one mode drops the other's rows entirely
    let out = run_cli(&[
        "toy",
        "--out",
        dir.path().join("toy2").to_str().unwrap(),
        "--bearings",
        "1",
        "--seeds",
        "1",
        "--modes",
        "valid",
    ]);
    assert!(out.status.success());
    let runs = std::fs::read_to_string(dir.path().join("toy2/toy_runs.csv")).unwrap();
    assert!(!runs.contains("leakage"));
    assert!(runs.contains("valid"));
}

#[test]
fn toy_rejects_invalid_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    // 24 training bearings per class with 48 total leaves no valid test set
    let out = run_cli(&[
        "toy",
        "--out",
        dir.path().join("x").to_str().unwrap(),
        "--bearings",
        "24",
        "--seeds",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn audit_flags_repetition_holdout_with_exit_code_11() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_pu_manifest(dir.path());
    let plan_file = dir.path().join("leaky.tsv");

    let out = run_cli(&[
        "split",
        "--manifest",
        &manifest,
        "--out",
        plan_file.to_str().unwrap(),
        "--kind",
        "repetition_wise",
        "--eval",
        "1",
        "--seed",
        "4",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = run_cli(&[
        "audit",
        "--manifest",
        &manifest,
        "--plan",
        plan_file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(11), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("repetition_wise"), "{text}");
    assert!(text.contains("witness"), "{text}");
}

#[test]
fn audit_passes_clean_plans_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_pu_manifest(dir.path());
    let plan_file = dir.path().join("clean.tsv");
    let out = run_cli(&[
        "split",
        "--manifest",
        &manifest,
        "--out",
        plan_file.to_str().unwrap(),
        "--eval",
        "3",
        "--seed",
        "4",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run_cli(&[
        "audit",
        "--manifest",
        &manifest,
        "--plan",
        plan_file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn run_with_empty_model_grid_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_pu_manifest(dir.path());
    let out = run_cli(&[
        "run",
        "--manifest",
        &manifest,
        "--out",
        dir.path().join("out").to_str().unwrap(),
        "--models",
        "",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_manifest_is_a_manifest_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(&[
        "split",
        "--manifest",
        dir.path().join("nope.jsonl").to_str().unwrap(),
        "--out",
        dir.path().join("x.tsv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn feature_csv_headers_are_the_documented_contract() {
    let dir = tempfile::tempdir().unwrap();
    let params = synthetic::BenchmarkParams {
        bearings_per_mode: 2,
        duration_s: 2.0,
        ..synthetic::BenchmarkParams::default()
    };
    let dataset = synthetic::write_benchmark_dataset(dir.path(), &params, 3).unwrap();
    let manifest = dir.path().join("manifest.jsonl");
    let plan_file = dir.path().join("plans.tsv");
    let out = run_cli(&[
        "split",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        plan_file.to_str().unwrap(),
        "--ratio",
        "1:1",
        "--eval",
        "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run_cli(&[
        "features",
        "--manifest",
        manifest.to_str().unwrap(),
        "--plan",
        plan_file.to_str().unwrap(),
        "--out",
        dir.path().join("feat").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(dir.path().join("feat/features_train.csv")).unwrap();
    let header = csv.lines().nth(1).expect("header after snapshot line");
    assert!(header.starts_with(
        "acquisition_id,segment_index,rms,peak_to_peak,kurtosis,skewness,crest_factor,env_bpfo_1x"
    ));
    assert!(header.contains("env_ftf_5x,fft_bpfo_1x"));
    for mode in dataset.profile.fault_modes.iter() {
        assert!(header.contains(&format!("label_{mode}")));
    }
    // rows: 1 bearing per mode x 3 states x 2 segments = 24 train rows
    assert_eq!(csv.lines().count(), 2 + 24);
}
