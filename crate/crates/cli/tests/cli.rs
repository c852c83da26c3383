// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64;
use qwfluor::dynamics;
use qwfluor::fit::io::{self, ColumnSelection};
use qwfluor::fit::FitReport;
use qwfluor::fock::{self, CollectiveModelParams};
use qwfluor::medium::{self, MediumParams};
use qwfluor::spectra::{self, DEFAULT_GAMMA_F};
use qwfluor_cli::{EXIT_IO, EXIT_NUMERICAL, EXIT_SCALE_GUARD, EXIT_VALIDATION};

const SMALL_MODEL: &str = r#"
[model]
delta = 0.1
rabi = 0.16
kerr = 0.45
gamma = 0.22
fock_dim = 12

[medium]
f = 1.0
background = 0.003

[grid]
lo = -1.5
hi = 1.5
points = 101
"#;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn qwfluor(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwfluor"))
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn assert_ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        o.status.code(),
        stdout(o),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn column(path: &Path, value: usize) -> Vec<f64> {
    io::load_spectrum_columns(path, ColumnSelection { value, weight: None })
        .unwrap()
        .series
        .values()
        .to_vec()
}

fn simulate(dir: &Path, text: &str, extra: &[&str]) -> PathBuf {
    let cfg = write_config(dir, "run.toml", text);
    let mut args = vec!["simulate", "-c", cfg.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    assert_ok(&qwfluor(dir, &args));
    dir.join("simulate.csv")
}

#[test]
fn simulate_table_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), SMALL_MODEL, &[]);
    let p = CollectiveModelParams::new(0.1, 0.16, 0.45, 0.22).with_fock_dim(12);
    let grid = spectra::uniform_grid(-1.5, 1.5, 101);
    let l = dynamics::build_liouvillian(&p).unwrap();
    let rho = dynamics::steady_state(&l).unwrap();
    let internal = spectra::internal_spectrum_with_rayleigh(&l, &rho, &grid, DEFAULT_GAMMA_F).unwrap();
    let m = MediumParams::matching(&p, 1.0).with_background(0.003);
    let output = medium::output_spectrum(&internal, &m).unwrap();
    let table = io::load_spectrum(&out);
    assert!(table.is_err(), "four-column table needs explicit columns");
    assert_eq!(column(&out, 1), internal.values());
    assert_eq!(column(&out, 2), medium::absorption(&grid, &m).unwrap().values());
    assert_eq!(column(&out, 3), output.values());
    let grid_back = io::load_spectrum_columns(&out, ColumnSelection::default()).unwrap();
    assert_eq!(grid_back.series.delta_grid(), grid.as_slice());
}

#[test]
fn undriven_mode_emits_only_background() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), SMALL_MODEL, &["--set", "model.rabi=0"]);
    assert!(column(&out, 1).iter().all(|v| *v == 0.0));
    assert!(column(&out, 3).iter().all(|v| *v == 0.003));
}

#[test]
fn linear_mode_shows_only_the_rayleigh_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), SMALL_MODEL, &["--set", "model.kerr=0", "--set", "model.rabi=0.03"]);
    let alpha = -0.03 / Complex64::new(0.1, -0.11);
    let grid = spectra::uniform_grid(-1.5, 1.5, 101);
    let peak = alpha.norm_sqr() * spectra::lorentzian(0.0, 0.0, DEFAULT_GAMMA_F);
    for (x, v) in grid.iter().zip(column(&out, 1)) {
        let expect = alpha.norm_sqr() * spectra::lorentzian(*x, 0.0, DEFAULT_GAMMA_F);
        assert!((v - expect).abs() < 1e-9 * peak, "at {x}: {v} vs {expect}");
    }
}

#[test]
fn seeded_noise_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let noisy = format!("{SMALL_MODEL}\n[noise]\nrelative = 0.05\nseed = 9\n");
    let first = std::fs::read(simulate(dir.path(), &noisy, &[])).unwrap();
    let second = std::fs::read(simulate(dir.path(), &noisy, &[])).unwrap();
    assert_eq!(first, second);
    let other = std::fs::read(simulate(dir.path(), &noisy, &["--set", "noise.seed=10"])).unwrap();
    assert_ne!(first, other);
}

#[test]
fn noise_without_seed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", &format!("{SMALL_MODEL}\n[noise]\nrelative = 0.05\n"));
    let o = qwfluor(dir.path(), &["simulate", "-c", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_VALIDATION));
    assert!(!dir.path().join("simulate.csv").exists());
}

#[test]
fn invalid_input_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "bad.toml", &format!("{SMALL_MODEL}\n[model2]\nx = 1\n"));
    let o = qwfluor(dir.path(), &["simulate", "-c", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_VALIDATION));
    let cfg = write_config(dir.path(), "run.toml", SMALL_MODEL);
    let o = qwfluor(dir.path(), &["simulate", "-c", cfg.to_str().unwrap(), "--set", "model.gamma=-1"]);
    assert_eq!(o.status.code(), Some(EXIT_VALIDATION));
    let o = qwfluor(dir.path(), &["sf-test", "only_one.toml"]);
    assert_eq!(o.status.code(), Some(EXIT_VALIDATION));
}

#[test]
fn unwritable_output_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL_MODEL);
    let blocker = dir.path().join("not_a_dir");
    std::fs::write(&blocker, "x").unwrap();
    let o = qwfluor(
        dir.path(),
        &["simulate", "-c", cfg.to_str().unwrap(), "--out-dir", blocker.join("sub").to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(EXIT_IO));
}

#[test]
fn unconverged_truncation_exits_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.toml",
        r#"
[model]
delta = 0.0
rabi = 3.0
kerr = 0.0
gamma = 0.05

[convergence]
tol = 1e-6
start = 4
step = 2
lookahead = 2
max_dim = 12
"#,
    );
    let o = qwfluor(dir.path(), &["convergence", "-c", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_NUMERICAL));
}

#[test]
fn oversized_oracle_hits_scale_guard() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("oracle_n2.toml");
    let o = qwfluor(
        dir.path(),
        &["oracle", "-c", cfg.to_str().unwrap(), "--set", "oracle.n_modes=8", "--out-dir", "."],
    );
    assert_eq!(o.status.code(), Some(EXIT_SCALE_GUARD));
    let o = qwfluor(
        dir.path(),
        &["oracle", "-c", cfg.to_str().unwrap(), "--set", "oracle.phase_mode=\"random\"", "--out-dir", "."],
    );
    assert_eq!(o.status.code(), Some(EXIT_VALIDATION));
}

#[test]
fn single_mode_oracle_agrees_with_collective_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("oracle_n2.toml");
    let o = qwfluor(
        dir.path(),
        &[
            "oracle",
            "-c",
            cfg.to_str().unwrap(),
            "--set",
            "oracle.n_modes=1",
            "--set",
            "grid.points=41",
            "--out-dir",
            ".",
        ],
    );
    assert_ok(&o);
    let text = std::fs::read_to_string(dir.path().join("oracle_n2.toml")).unwrap();
    let table: toml::Table = toml::from_str(&text).unwrap();
    let dev = table["max_rel_deviation"].as_float().unwrap();
    assert!(dev < 1e-12, "deviation {dev}");
    assert!(dir.path().join("oracle_n2_spectra.csv").exists());
}

#[test]
fn published_fit_reports_are_superfluorescent() {
    let dir = tempfile::tempdir().unwrap();
    let t = configs().join("power_series");
    let reports: Vec<String> = ["fit_310uW.toml", "fit_100uW.toml", "fit_150uW.toml"]
        .iter()
        .map(|f| t.join(f).to_string_lossy().into_owned())
        .collect();
    let mut args = vec!["sf-test", "--out-dir", "."];
    args.extend(reports.iter().map(String::as_str));
    let o = qwfluor(dir.path(), &args);
    assert_ok(&o);
    assert!(stdout(&o).contains("verdict = superfluorescent"));
    let table: toml::Table = toml::from_str(&std::fs::read_to_string(dir.path().join("sf_report.toml")).unwrap()).unwrap();
    assert_eq!(table["verdict"].as_str(), Some("superfluorescent"));
    let pairs = table["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 2);
    let lhs = pairs[0]["lhs"].as_float().unwrap();
    assert!((lhs - 1.8518518518518519).abs() < 1e-12);
    assert_eq!(pairs[1]["power_2"].as_float(), Some(310.0));
}

#[test]
fn identical_reports_scale_like_random_phases() {
    let dir = tempfile::tempdir().unwrap();
    let report = configs().join("power_series/fit_150uW.toml");
    let r = report.to_str().unwrap();
    let o = qwfluor(dir.path(), &["sf-test", "--out-dir", ".", r, r]);
    assert_ok(&o);
    assert!(stdout(&o).contains("lhs = 1.000"));
    assert!(stdout(&o).contains("verdict = random_phase"));
}

#[test]
fn convergence_table_lists_samples() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("convergence_reference.toml");
    let o = qwfluor(dir.path(), &["convergence", "-c", cfg.to_str().unwrap(), "--out-dir", "."]);
    assert_ok(&o);
    assert!(stdout(&o).contains("converged fock_dim = 8"));
    let rows = column(&dir.path().join("convergence_reference.csv"), 1);
    assert!((rows[0] - rows[1]).abs() < 1e-6);
}

#[test]
fn synthetic_power_point_round_trips_through_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("synthetic_310uW.toml");
    let c = cfg.to_str().unwrap();
    assert_ok(&qwfluor(dir.path(), &["simulate", "-c", c]));
    let o = qwfluor(dir.path(), &["fit", "-c", c, "--out", "fit_310uW.toml"]);
    assert_ok(&o);
    let report = FitReport::from_toml(&std::fs::read_to_string(dir.path().join("out/fit_310uW.toml")).unwrap()).unwrap();
    let p = report.result.params;
    assert!((p.rabi - 0.16).abs() < 0.02 * 0.16, "rabi {}", p.rabi);
    assert!((p.kerr - 0.45).abs() < 0.02 * 0.45, "kerr {}", p.kerr);
    assert!((p.delta - 0.09).abs() < 0.02 * 0.09, "delta {}", p.delta);
    assert_eq!(report.result.laser_power, Some(310.0));
    assert!(dir.path().join("out/fit_310uW_model.csv").exists());
    let n = fock::number(report.result.fock_dim).unwrap();
    assert_eq!(n.dim(), report.result.fock_dim);
}
