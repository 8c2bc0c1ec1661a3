//! End-to-end runs of the `eprenorm` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eprenorm::epsolver::{markovian_ep, solve_exact_ep};
use eprenorm::model::{rad_to_hz, SystemParams};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_eprenorm"));
    c.env_remove("EPRENORM_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Compares against a stored file; `UPDATE_GOLDEN=1` rewrites it.
fn check_golden(name: &str, args: &[&str]) {
    let o = run(args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &o.stdout).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap();
    assert_eq!(stdout(&o), want, "output drifted from {name}");
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("params.toml");
    std::fs::write(&p, body).unwrap();
    p
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn golden_eigs_sweep() {
    check_golden("eigs_markovian_11.csv", &["eigs", "--g-points", "11", "--markovian-ref", "--quiet"]);
}

#[test]
fn golden_petermann_point() {
    check_golden(
        "petermann_markovian_point.csv",
        &["petermann", "--delta-mode", "markovian", "--at", "48.75", "--quiet"],
    );
}

#[test]
fn golden_spectrum() {
    check_golden(
        "spectrum_21.csv",
        &["spectrum", "--omega-min", "990", "--omega-max", "1010", "--omega-points", "21", "--quiet"],
    );
}

#[test]
fn repeated_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, threads) in [(&a, None), (&b, Some("1"))] {
        let mut c = bin();
        c.args(["petermann", "--g-points", "41", "--json", "--quiet", "--out"]).arg(path);
        if let Some(t) = threads {
            c.env("EPRENORM_THREADS", t);
        }
        let o = c.output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let twin: serde_json::Value = serde_json::from_slice(&std::fs::read(a.with_extension("json")).unwrap()).unwrap();
    assert_eq!(twin["manifest"]["command"], "petermann");
    assert_eq!(twin["data"]["calibrations"].as_array().unwrap().len(), 2);
    assert!(twin["manifest"].get("timestamp").is_none());
    let side = std::fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap();
    let side: serde_json::Value = serde_json::from_str(&side).unwrap();
    assert!(side["timestamp"].as_str().is_some());
}

#[test]
fn ep_json_matches_library() {
    let o = run(&["ep", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let p = SystemParams::representative();
    let exact = solve_exact_ep(&p).unwrap();
    let got = v["data"]["exact"]["delta_khz"].as_f64().unwrap();
    let want = rad_to_hz(exact.delta_ep) / 1e3;
    assert!(((got - want) / want).abs() < 1e-14, "{got} vs {want}");
    assert_eq!(v["data"]["markovian"]["g_khz"].as_f64().unwrap(), 48.75);
    assert_eq!(v["data"]["order_two_certificate"]["passed"], true);
}

#[test]
fn human_report_by_default() {
    let o = run(&["ep"]);
    let s = stdout(&o);
    assert!(s.contains("-998.6850326") && s.contains("49.37501085"), "{s}");
    assert!(s.contains("PASS"));
}

#[test]
fn sweep_summary_goes_to_stderr() {
    let o = run(&["eigs", "--g-points", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("g_khz,re_l1"));
    assert!(stderr(&o).contains("smallest optomechanical gap"));
    let quiet = run(&["eigs", "--g-points", "3", "--quiet"]);
    assert!(stderr(&quiet).is_empty());
}

#[test]
fn validation_errors_exit_one() {
    for args in [
        &["eigs", "--g-points", "1"][..],
        &["eigs", "--g-min", "60", "--g-max", "40"],
        &["eigs", "--delta-mode", "sideways"],
        &["spectrum", "--omega-points", "0"],
        &["embedcheck", "--dt", "1e-6"],
        &["petermann", "--at", "45", "--at-ep"],
        &["nonsense"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
    let o = bin().args(["eigs", "--g-points", "2"]).env("EPRENORM_THREADS", "0").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let v = run(&["--version"]);
    assert_eq!(v.status.code(), Some(0));
    assert!(stdout(&v).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[mechanics]\nfreq_hz = 1e6\n\n[cavity]\nkappa_hz = -5\n");
    let o = bin().arg("ep").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains(":5:") && e.contains("cavity.kappa_hz"), "{e}");

    let cfg = write_config(dir.path(), "[cavity]\nkappa = 1\n");
    let o = bin().arg("ep").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("kappa"));

    let o = run(&["ep", "--config", "/nonexistent/params.toml"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn cavity_slower_than_mechanics_has_no_ep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[cavity]\nkappa_hz = 4e3\n");
    let o = bin().arg("ep").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("kappa"), "{}", stderr(&o));
    // sweeps at a fixed detuning remain available
    let o = bin()
        .args(["eigs", "--g-points", "5", "--quiet", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn undamped_mechanics_collapses_to_memoryless() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[mechanics]\ngamma_hz = 0\n");
    let o = bin().args(["ep", "--json", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let p = SystemParams::from_hz(1e6, 2e5, 0.0, 1e6).unwrap();
    let m = markovian_ep(&p).unwrap();
    for kind in ["perturbative", "exact"] {
        let d = v["data"][kind]["delta_khz"].as_f64().unwrap();
        let g = v["data"][kind]["g_khz"].as_f64().unwrap();
        assert!((d - rad_to_hz(m.delta_ep) / 1e3).abs() < 1e-9, "{kind}");
        assert!((g - rad_to_hz(m.g_ep) / 1e3).abs() < 1e-9, "{kind}");
    }
    let o = bin()
        .args(["spectrum", "--omega-points", "11", "--quiet", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    for row in data_rows(&stdout(&o)) {
        assert_eq!(row[1], row[2]);
    }
}

#[test]
fn two_point_grid_is_enough() {
    let o = run(&["eigs", "--g-min", "48", "--g-max", "50", "--g-points", "2", "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "48");
    assert_eq!(rows[1][0], "50");
}

#[test]
fn explicit_detuning_value() {
    let o = run(&["eigs", "--g-points", "2", "--delta-mode", "value:-998.5", "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("# delta_khz: -998.5"));
}

#[test]
fn embedcheck_passes_at_default_step() {
    let o = run(&["embedcheck", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["data"]["max_rel_err"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["data"]["passed"], true);
}
