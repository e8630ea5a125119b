use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_polariton-lab"));
    c.env("POLARITON_LAB_THREADS", "1");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn dos_writes_schema_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["dos", "--points", "101", "--out", "sub/dos.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sub/dos.csv")).unwrap();
    assert!(csv.contains("# schema: spectrum/v1"));
    assert!(csv.lines().any(|l| l == "omega_eV,value"));
    assert!(!csv.contains("sub/dos.csv"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 101);
    assert!(rows.iter().all(|r| r.len() == 2 && r[1] >= 0.0));
    let manifest = fs::read_to_string(dir.path().join("sub/dos.csv.manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(v["tool"], "polariton-lab");
    assert_eq!(v["config"]["grid"]["n_points"], 101);
}

#[test]
fn replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["dos", "--kind", "rho_t", "--sigma", "0.03", "--points", "201", "--out", "a.csv"];
    assert_eq!(run(dir.path(), &args).status.code(), Some(0));
    let out = run(dir.path(), &["replay", "a.csv.manifest.json", "--out", "b.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ensemble_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "ensemble", "--n-molecules", "40", "--realizations", "20", "--seed", "7", "--model", "2",
        "--points", "51", "--out", "e.csv",
    ];
    assert_eq!(run(dir.path(), &args).status.code(), Some(0));
    assert_eq!(run(dir.path(), &["replay", "e.csv.manifest.json", "--out", "f.csv"]).status.code(), Some(0));
    let a = fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert!(a.lines().any(|l| l == "omega_eV,value,stderr"));
    assert_eq!(a, fs::read_to_string(dir.path().join("f.csv")).unwrap());
}

#[test]
fn invalid_parameters_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["dos", "--eta", "0"],
        vec!["dos", "--sigma", "-0.1"],
        vec!["dos", "--omega-min", "3", "--omega-max", "2"],
        vec!["dos", "--model", "3"],
        vec!["ensemble", "--realizations", "0"],
    ] {
        let out = run(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    }
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("blocker"), "x").unwrap();
    let out = run(dir.path(), &["dos", "--points", "11", "--out", "blocker/x.csv"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(dir.path(), &["replay", "missing.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.conf"),
        "# test config\neps-c = 2.1\nsigma_rel = 0.01\npoints = 21\nout = c.csv\n",
    )
    .unwrap();
    let out = run(dir.path(), &["dos", "--config", "run.conf", "--eps-c", "2.05"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert!(csv.contains("# eps_c_eV: 2.0499999999999998e0"));
    assert!(csv.contains("# sigma_eV: 2.0000000000000000e-2"));
    assert_eq!(data_rows(&csv).len(), 21);

    fs::write(dir.path().join("bad.conf"), "colour = red\n").unwrap();
    assert_eq!(run(dir.path(), &["dos", "--config", "bad.conf"]).status.code(), Some(2));
}

#[test]
fn poles_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["poles", "--sigma", "0.02", "--out", "p.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert!(csv.contains("# schema: poles/v1"));
    assert!(csv.contains("# pair_found: true"));
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.iter().filter(|l| l.contains(",polaritonic,")).count(), 2);
}

#[test]
fn sweep_writes_one_file_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["sweep", "--var", "sigma", "--values", "0.01,0.02,0.03", "--relative", "--points", "11", "--out", "s.csv"],
    );
    assert_eq!(out.status.code(), Some(0));
    for i in 0..3 {
        assert!(dir.path().join(format!("s_sigma_{i}.csv")).exists());
    }
    let first = fs::read_to_string(dir.path().join("s_sigma_0.csv")).unwrap();
    assert!(first.contains("# sweep_value: 1.0000000000000000e-2"));
    assert!(first.contains("# sigma_eV: 2.0000000000000000e-2"));
}

#[test]
fn self_test_passes_and_detects_corruption() {
    let ok = bin().arg("self-test").output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let bad = bin().args(["self-test", "--corrupt-dawson"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL dawson_accuracy"));
}

#[test]
fn bad_thread_count_rejected() {
    let out = bin().env("POLARITON_LAB_THREADS", "zero").arg("self-test").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
