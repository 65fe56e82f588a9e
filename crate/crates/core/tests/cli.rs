use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blowup-lab"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn weightfn_prints_csv_without_out_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &["weightfn", "eval", "--n", "3", "--r", "0", "--r", "1"],
        tmp.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,F,ratio"));
    let first: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((first[1] - 4.0 * std::f64::consts::PI).abs() < 1e-13);
    assert_eq!(lines.count(), 1);
}

#[test]
fn usage_errors_list_every_issue() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["ode", "sweep", "--n", "4"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("n must be 1..3") && err.contains("eps"),
        "{err}"
    );
}

#[test]
fn config_file_and_inline_params_are_exclusive() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "kind = \"ode\"\n[ode]\nmode = \"sweep\"\nn = 1\neps = [0.05, 0.1, 0.15, 0.2]\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let out = run(&["--config", cfg, "ode", "sweep", "--n", "2"], tmp.path());
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["--config", cfg, "--out", "sweep"], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dir = tmp.path().join("sweep");
    for f in ["lifespans.csv", "fit.txt", "lifespan.svg", "manifest.json"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    let m = manifest(&dir);
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["kind"], "ode");
    assert!(m["config_text"].as_str().unwrap().contains("sweep"));
}

#[test]
fn config_errors_carry_positions() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "kind = \"sim\"\n[sim]\nsystem = \"slab-euler\"\neps = -1\ntmax = 1\nbogus = 3\n",
    )
    .unwrap();
    let out = run(&["--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4") && err.contains("line 6"), "{err}");
}

#[test]
fn coarse_mhd_run_violates_contracts() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "sim", "mhd2d", "--eps", "0.1", "--b0", "1", "--h-amp", "0.5", "--cells", "96", "--tmax",
        "1",
    ];
    let out = run(&[&args[..], &["--out", "m"]].concat(), tmp.path());
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m = manifest(&tmp.path().join("m"));
    assert_eq!(m["status"], "contract-violation");
    assert!(tmp.path().join("m/series.csv").exists());
}

#[test]
fn vacuum_is_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "sim",
        "slab-euler",
        "--eps",
        "1",
        "--rho-amp",
        "0.45",
        "--vel-amp",
        "1000",
        "--cells",
        "800",
        "--tmax",
        "0.5",
        "--out",
        "v",
    ];
    let out = run(&args, tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let m = manifest(&tmp.path().join("v"));
    assert_eq!(m["status"], "numerical-failure");
    assert!(m["runs"][0]["diagnostic"]
        .as_str()
        .unwrap()
        .contains("vacuum"));
}

#[test]
fn default_output_directory_is_under_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "verify",
            "identities",
            "--suite",
            "euler",
            "--resolution",
            "12",
            "--holder-fields",
            "2",
        ],
        tmp.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let runs: Vec<_> = std::fs::read_dir(tmp.path().join("runs"))
        .unwrap()
        .collect();
    assert_eq!(runs.len(), 1);
    let dir = runs[0].as_ref().unwrap().path();
    assert!(dir.join("residuals.csv").exists() && dir.join("manifest.json").exists());
}
