use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sim")).args(args).output().unwrap()
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .display()
        .to_string()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

fn run_ok(args: &[&str]) {
    let out = sim(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn eigens_and_ldos_write_manifest_and_csv() {
    let tmp = tempfile::tempdir().unwrap();
    for (scenario, file, csv) in [("eigens", "eigens.json", "eigens.csv"), ("ldos", "ldos.json", "ldos.csv")] {
        let dir = tmp.path().join(scenario);
        run_ok(&[scenario, "--config", &config(file), "--out", dir.to_str().unwrap()]);
        assert!(dir.join(csv).is_file());
        assert_eq!(manifest(&dir)["scenario"], scenario);
    }
}

#[test]
fn set_overrides_reach_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("o");
    run_ok(&[
        "ldos",
        "--config",
        &config("ldos.json"),
        "--out",
        dir.to_str().unwrap(),
        "--set",
        "system.eta=3.5",
        "--set",
        "sweep.steps=11",
    ]);
    let m = manifest(&dir);
    assert_eq!(m["config"]["system"]["eta"], 3.5);
    let rows = fs::read_to_string(dir.join("ldos.csv")).unwrap().lines().count();
    assert_eq!(rows, 12);
}

#[test]
fn unknown_keys_fail_loudly() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("x");
    let out = sim(&["ldos", "--config", &config("ldos.json"), "--out", dir.to_str().unwrap(), "--set", "system.etta=1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("system.etta"));
    assert!(!dir.exists());
}

#[test]
fn dynamics_output_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs: Vec<PathBuf> = ["a", "b"].iter().map(|d| tmp.path().join(d)).collect();
    for d in &dirs {
        run_ok(&[
            "dynamics",
            "--config",
            &config("decoupled.json"),
            "--out",
            d.to_str().unwrap(),
            "--set",
            "integration.t_final=10",
            "--set",
            "continuum.n_modes=201",
        ]);
    }
    let files = manifest(&dirs[0])["files"].as_array().unwrap().clone();
    assert!(!files.is_empty());
    for f in files {
        let f = f.as_str().unwrap();
        assert_eq!(fs::read(dirs[0].join(f)).unwrap(), fs::read(dirs[1].join(f)).unwrap(), "{f}");
    }
}

#[test]
fn sweep_runs_each_value() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok(&[
        "sweep",
        "--config",
        &config("ldos.json"),
        "--out",
        tmp.path().to_str().unwrap(),
        "--vary",
        "system.eta=1,2",
        "--workers",
        "2",
    ]);
    assert!(tmp.path().join("sweep.json").is_file());
    assert!(tmp.path().join("system.eta=1/manifest.json").is_file());
    assert!(tmp.path().join("system.eta=2/ldos.csv").is_file());
}
