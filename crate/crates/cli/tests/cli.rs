//! End-to-end runs of the `purify` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use purify_core::bayes::time_to_mean_purity_parallel;
use purify_core::stats::linear_fit;
use tempfile::TempDir;

fn purify(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_purify")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = purify(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

/// Column line and data rows of a table.
fn rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().expect("column line").split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let (header, data) = rows(text);
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    data.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn assert_replays(file: &Path, dir: &TempDir) {
    let again: PathBuf = dir.path().join("replayed.csv");
    ok(&["replay", path_str(file), "--out", path_str(&again)]);
    assert_eq!(read(&again), read(file), "replay of {}", file.display());
}

#[test]
fn empty_ensemble_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("empty.csv");
    ok(&["simulate", "--trajectories", "0", "--seed", "1", "--out", path_str(&out)]);
    let text = read(&out);
    let (header, data) = rows(&text);
    assert_eq!(header, ["time", "mean_purity", "se_purity", "mean_log_s", "se_log_s"]);
    assert!(data.is_empty());
    assert!(text.contains("# seed = 1\n") && text.contains("# time-unit = 1/gamma0\n"));
}

#[test]
fn simulate_is_independent_of_workers_and_replays() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        ok(&[
            "simulate", "--eta", "0.9", "--epsilon", "0.05", "--horizon", "1", "--points", "10", "--trajectories", "64",
            "--seed", "17", "--workers", workers, "--out", path_str(&out),
        ]);
        out
    };
    let one = run("one.csv", "1");
    let three = run("three.csv", "3");
    for table in ["", "passage", "summary"] {
        let (a, b) = if table.is_empty() {
            (one.clone(), three.clone())
        } else {
            (dir.path().join(format!("one.{table}.csv")), dir.path().join(format!("three.{table}.csv")))
        };
        assert_eq!(read(&a), read(&b), "table {table}");
        assert_replays(&a, &dir);
    }
}

#[test]
fn jacobs_passage_times_coincide() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("jacobs.csv");
    let dt = 1e-3;
    ok(&[
        "simulate", "--protocol", "jacobs", "--epsilon", "0.01", "--horizon", "3", "--trajectories", "100", "--seed", "5",
        "--dt", "0.001", "--out", path_str(&out),
    ]);
    let passage = read(&dir.path().join("jacobs.passage.csv"));
    let (_, data) = rows(&passage);
    assert_eq!(data.len(), 100);
    assert!(data.iter().all(|r| r[1] == "crossed"));
    let times = column(&passage, "time");
    let (lo, hi) = times.iter().fold((f64::MAX, f64::MIN), |(l, h), &t| (l.min(t), h.max(t)));
    assert!(hi - lo <= dt, "spread {}", hi - lo);
    // p(t) = 1 − ½e^{−2t} reaches 1 − ε at ½ ln(1/2ε).
    assert!((lo - 0.5 * (50.0f64).ln()).abs() < 2.0 * dt, "{lo}");
}

#[test]
fn mtfp_rows_are_exact() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("mtfp.csv");
    ok(&["mtfp", "--delta", "0,2e-5,1e-4", "--epsilon", "1e-3,1e-4", "--out", path_str(&out)]);
    let text = read(&out);
    let (d, e, a) = (column(&text, "delta"), column(&text, "epsilon"), column(&text, "a"));
    let (t, t0, dt) = (column(&text, "T_bar"), column(&text, "T_bar_ideal"), column(&text, "delta_T"));
    assert_eq!(d.len(), 6);
    for i in 0..d.len() {
        assert_eq!(a[i], d[i] / e[i]);
        assert_eq!(dt[i], t[i] - t0[i]);
    }
    assert!((t[1] - 0.9825).abs() < 5e-4, "{}", t[1]);
    assert_replays(&out, &dir);
}

#[test]
fn mtfp_accepts_efficiencies() {
    let out = ok(&["mtfp", "--eta", "1,0.9999", "--epsilon", "1e-4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# eta = 1,0.9999\n"));
    let delta = column(&text, "delta");
    assert_eq!(delta, [0.0, 1.0 - 0.9999]);
}

#[test]
fn scaling_tables() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("scaling.csv");
    ok(&[
        "scaling", "--epsilon", "1e-5", "--a", "0:0.5:11", "--large-a", "20,100", "--large-a-epsilon", "1e-8", "--out",
        path_str(&out),
    ]);
    let fig3 = read(&out);
    let (a, dt) = (column(&fig3, "a"), column(&fig3, "delta_T"));
    assert_eq!(a[0], 0.0);
    assert_eq!(dt[0], 0.0);
    let y: Vec<f64> = dt.iter().map(|v| 8.0 * v).collect();
    let slope = linear_fit(&a, &y).slope;
    assert!((0.15..=0.18).contains(&slope), "{slope}");
    let fig4_path = dir.path().join("scaling.fig4.csv");
    let fig4 = read(&fig4_path);
    for c1 in column(&fig4, "C1") {
        assert!((0.25..=0.5).contains(&c1), "{c1}");
    }
    assert_replays(&out, &dir);
    assert_replays(&fig4_path, &dir);
}

#[test]
fn protocol_ratios() {
    let out = ok(&["protocols", "--epsilon", "1e-4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let (_, data) = rows(&text);
    assert_eq!(&data[0][6..], ["2.000", "4.000", "2.000"]);
}

#[test]
fn empty_protocol_table() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("protocols.csv");
    ok(&["protocols", "--epsilon", "", "--out", path_str(&out)]);
    let text = read(&out);
    assert!(rows(&text).1.is_empty());
    assert_replays(&out, &dir);
}

#[test]
fn protocol_cross_check_matches_quadrature() {
    let out = ok(&["protocols", "--epsilon", "1e-3", "--check", "--trajectories", "10000", "--seed", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let (mc, se) = (column(&text, "T_iso_mc")[0], column(&text, "T_iso_mc_se")[0]);
    let full = column(&text, "T_iso_full")[0];
    assert!((mc - full).abs() < 3.0 * se + 0.01, "mc {mc} +- {se} vs {full}");
    assert_eq!(column(&text, "T_iso_mc_censored")[0], 0.0);
    let exact = column(&text, "tau_par_exact")[0];
    assert_eq!(exact, time_to_mean_purity_parallel(0.5, 1e-3, 1.0).unwrap());
}

#[test]
fn fpe_tables() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("fpe.csv");
    ok(&["fpe", "--eta", "0.9", "--horizon", "2", "--points", "4", "--out", path_str(&out)]);
    let moments = read(&out);
    let (mean, naive) = (column(&moments, "mean_purity"), column(&moments, "naive_mean_purity"));
    assert!((mean[0] - 0.5).abs() < 0.01, "{}", mean[0]);
    assert!(mean.windows(2).all(|w| w[1] >= w[0]));
    assert!(mean.iter().zip(&naive).all(|(m, n)| (m - n).abs() < 0.03));
    let density = dir.path().join("fpe.density.csv");
    assert_eq!(rows(&read(&density)).1.len(), purify_core::fpe::DEFAULT_CELLS);
    assert_replays(&out, &dir);
    assert_replays(&density, &dir);
}

#[test]
fn bayes_check_passes() {
    let out = ok(&["bayes-check", "--trajectories", "50", "--seed", "9"]);
    assert_eq!(rows(&String::from_utf8(out.stdout).unwrap()).1.len(), 50);
    assert!(String::from_utf8(out.stderr).unwrap().contains("median gap"));
}

#[test]
fn config_file_and_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# fpe settings\neta = 0.95\nhorizon = 1\npoints = 2\ncells = 200\n").unwrap();
    let out = ok(&["fpe", "--config", path_str(&cfg), "--horizon", "0.5"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# eta = 0.95\n") && text.contains("# horizon = 0.5\n"), "{text}");
    // A flag replaces the other efficiency form from the file.
    let out = ok(&["fpe", "--config", path_str(&cfg), "--delta", "0.1"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("# delta = 0.1\n"));
}

#[test]
fn unknown_config_keys_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("typo.cfg");
    std::fs::write(&cfg, "epsilon = 1e-4\nepsilom = 1e-5\n").unwrap();
    let out = purify(&["mtfp", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("epsilom") && err.contains("line 2"), "{err}");
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| purify(args).status.code();
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["mtfp", "--nonsense"]), Some(1));
    assert_eq!(code(&["simulate", "--seed", "1", "--dt", "0.5"]), Some(1));
    assert_eq!(code(&["mtfp", "--trajectories", "5"]), Some(1));
    assert_eq!(code(&["fpe", "--eta", "0.9,0.8"]), Some(1));
    // Forward Euler beyond its stability bound.
    assert_eq!(code(&["fpe", "--stepping", "explicit", "--dt", "0.01", "--cells", "200"]), Some(2));
}

#[test]
fn failed_runs_write_nothing() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("never.csv");
    let status = purify(&["fpe", "--stepping", "explicit", "--dt", "0.01", "--out", path_str(&out)]).status;
    assert_eq!(status.code(), Some(2));
    assert!(!out.exists());
}
