use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use locaudit_cli::{run, ExperimentConfig, ExperimentRecord, RunOptions};

fn locaudit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locaudit")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

fn run_to(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let mut args = vec!["run", config, "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    locaudit(&args)
}

#[test]
fn moment_check_passes_and_writes_residual_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"kind": "moment_check"}"#);
    let out = run_to(&tmp.path().join("o"), &cfg, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("o/residuals.csv")).unwrap();
    assert!(csv.starts_with("gamma,eps1,eps2,l,m,max_residual"));
    assert_eq!(csv.lines().count(), 21);
    assert!(!csv.contains('\r'));
}

#[test]
fn gate_violation_is_reported_with_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"kind": "audit_lower", "eps1": 0.1, "lambda": 1e-5}"#);
    let out = run_to(&tmp.path().join("o"), &cfg, &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("eps1") && err.contains("ε₁ < 1/48"), "{err}");
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn unreadable_config_exits_one() {
    let out = locaudit(&["run", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn aggregates_do_not_depend_on_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"kind": "audit_lower", "lambda": 1e-5, "trials": 24, "auditors": ["simple", "constant", "oracle"]}"#,
    );
    let a = run_to(&tmp.path().join("a"), &cfg, &["--workers", "1", "--seed", "11"]);
    let b = run_to(&tmp.path().join("b"), &cfg, &["--workers", "4", "--seed", "11"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    for f in ["aggregate.json", "trials.csv"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap(), "{f}");
    }
    let c = run_to(&tmp.path().join("c"), &cfg, &["--seed", "12"]);
    assert_eq!(c.status.code(), Some(0));
    assert_ne!(fs::read(tmp.path().join("a/trials.csv")).unwrap(), fs::read(tmp.path().join("c/trials.csv")).unwrap());
}

#[test]
fn workers_default_comes_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"kind": "locality_sweep"}"#);
    let out = Command::new(env!("CARGO_BIN_EXE_locaudit"))
        .args(["run", &cfg, "--out", tmp.path().join("o").to_str().unwrap()])
        .env("AUDIT_WORKERS", "0x")
        .output()
        .unwrap();
    // A malformed worker count is a usage error.
    assert_ne!(out.status.code(), Some(0));
    let ok = Command::new(env!("CARGO_BIN_EXE_locaudit"))
        .args(["run", &cfg, "--out", tmp.path().join("o").to_str().unwrap()])
        .env("AUDIT_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn record_round_trips_and_replays() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"kind": "world_separation", "lambda": 1e-5, "trials": 20, "master_seed": 3}"#,
    );
    let out = run_to(&tmp.path().join("o"), &cfg, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let rec = ExperimentRecord::load(&tmp.path().join("o/record.json")).unwrap();
    let again: ExperimentRecord = serde_json::from_str(&rec.to_json()).unwrap();
    assert_eq!(again, rec);

    // The echoed config has K and n resolved; running it reproduces the aggregate.
    let echoed = rec.config.clone().unwrap();
    assert!(matches!(echoed.k, locaudit_cli::AutoOr::Value(_)));
    let replay = run(&echoed, &RunOptions::default()).unwrap();
    let disk = fs::read_to_string(tmp.path().join("o/aggregate.json")).unwrap();
    assert_eq!(replay.aggregate_json(), disk);
}

#[test]
fn separation_with_coarse_cells_fails_with_exit_two() {
    // About 4k rectangles: per-cell fluctuations are comparable to eps2.
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"kind": "world_separation", "lambda": 9.9e-5, "trials": 50}"#);
    let out = run_to(&tmp.path().join("o"), &cfg, &[]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Fail"));
}

#[test]
fn spheres_record_plots_scatter_with_guides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"kind": "spheres_scan", "distribution": {"kind": "spheres", "d": 5}, "trials": 6, "n_points": 400, "restarts": 1}"#,
    );
    let dir = tmp.path().join("o");
    let out = run_to(&dir, &cfg, &[]);
    assert!(matches!(out.status.code(), Some(0) | Some(2)));
    let svg = dir.join("scan.svg");
    let p = locaudit(&["plot", dir.join("record.json").to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(p.status.code(), Some(0));
    let s = fs::read_to_string(&svg).unwrap();
    assert_eq!(s.matches("stroke-dasharray").count(), 2);
    assert!(s.contains("<circle"));
    // Plotting is deterministic.
    let svg2 = dir.join("scan2.svg");
    locaudit(&["plot", dir.join("record.json").to_str().unwrap(), "--out", svg2.to_str().unwrap()]);
    assert_eq!(fs::read(&svg).unwrap(), fs::read(&svg2).unwrap());
}

#[test]
fn empty_record_plots_empty_axes() {
    let tmp = tempfile::tempdir().unwrap();
    let rec = tmp.path().join("r.json");
    fs::write(&rec, "{}").unwrap();
    let svg = tmp.path().join("e.svg");
    let out = locaudit(&["plot", rec.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let s = fs::read_to_string(&svg).unwrap();
    assert!(s.starts_with("<svg") && !s.contains("<circle"));
}

#[test]
fn missing_record_is_unreadable() {
    let tmp = tempfile::tempdir().unwrap();
    let out = locaudit(&["plot", "/nonexistent/record.json", "--out", tmp.path().join("x.svg").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read record"));
}

#[test]
fn sweep_plot_has_two_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"kind": "locality_sweep"}"#);
    let dir = tmp.path().join("o");
    assert_eq!(run_to(&dir, &cfg, &[]).status.code(), Some(0));
    let svg = dir.join("s.svg");
    locaudit(&["plot", dir.join("record.json").to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(fs::read_to_string(&svg).unwrap().matches("<polyline").count(), 2);
}

#[test]
fn bounds_prints_both_sample_sizes() {
    let out = locaudit(&["bounds", "--gamma", "0.02", "--eps1", "0.01", "--eps2", "0.01", "--delta", "0.1", "--lambda", "1e-5"]);
    assert_eq!(out.status.code(), Some(0));
    let s = String::from_utf8_lossy(&out.stdout);
    assert!(s.contains("lower bound n          = 1535"), "{s}");
    assert!(s.contains("m (anchors)"));
    let out = locaudit(&["bounds", "--gamma", "0.3", "--eps1", "0.2", "--eps2", "0.1", "--delta", "0.1", "--lambda", "0.25"]);
    let s = String::from_utf8_lossy(&out.stdout);
    assert!(s.contains("upper bound n          = 117707") && s.contains("n/a"), "{s}");
    let bad = locaudit(&["bounds", "--gamma", "2", "--eps1", "0.2", "--eps2", "0.1", "--delta", "0.1", "--lambda", "0.25"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn config_loads_from_disk() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), "c.json", r#"{"kind": "spheres_scan", "distribution": {"kind": "spheres", "d": 7}}"#);
    let c = ExperimentConfig::load(Path::new(&p)).unwrap();
    assert!(c.validate().is_ok());
}
