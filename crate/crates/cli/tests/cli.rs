use std::path::Path;
use std::process::{Command, Output};

use snubber::table::{parse_harmonics, parse_spectrum, parse_sweep, TrajectoryTable};

fn snubber(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snubber"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Numeric column `col` of the `modal` table.
fn modal_column(o: &Output, col: usize) -> Vec<f64> {
    stdout(o)
        .lines()
        .filter(|l| l.trim_start().starts_with(|c: char| c.is_ascii_digit()))
        .map(|l| l.split_whitespace().nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn modal_defaults() {
    let o = snubber(&["modal"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bare = modal_column(&o, 1);
    let loaded = modal_column(&o, 2);
    assert_eq!(bare.len(), 3);
    assert!((loaded[0] - 19.97).abs() / 19.97 < 0.01, "{loaded:?}");
    assert!(loaded.iter().zip(&bare).all(|(l, b)| l < b));
}

#[test]
fn modal_single_element_single_mode() {
    let o = snubber(&["modal", "--k", "1", "--elements", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(modal_column(&o, 1).len(), 1);
}

#[test]
fn modal_density_scaling() {
    let base = modal_column(&snubber(&["modal"]), 1);
    let heavy = modal_column(&snubber(&["modal", "--rho", "5400"]), 1);
    let ratio = base[0] / heavy[0];
    assert!((ratio - 2f64.sqrt()).abs() < 1e-3, "{ratio}");
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "rho = 5400.0\nelements = 10\n").unwrap();
    let from_file = modal_column(&snubber(&["modal", "--config", cfg.to_str().unwrap()]), 1);
    let overridden = modal_column(
        &snubber(&["modal", "--config", cfg.to_str().unwrap(), "--rho", "2700"]),
        1,
    );
    let base = modal_column(&snubber(&["modal"]), 1);
    assert!(from_file[0] < base[0]);
    assert_eq!(overridden, base);
}

#[test]
fn config_errors_exit_1() {
    let o = snubber(&["modal", "--elements", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("elements"));

    let o = snubber(&["modal", "--spring-node", "11"]);
    assert_eq!(o.status.code(), Some(1));

    let o = snubber(&["modal", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "colour = 1\n").unwrap();
    let o = snubber(&["modal", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_2() {
    // A force near f64::MAX overflows the state on the first step.
    let dir = tempfile::tempdir().unwrap();
    let force = dir.path().join("huge.txt");
    std::fs::write(&force, "0.0, 0.0\n0.5, 1.7e308\n").unwrap();
    let o = snubber(&[
        "simulate",
        "--elements",
        "2",
        "--t-end",
        "0.01",
        "--sample-dt",
        "1e-4",
        "--force-file",
        force.to_str().unwrap(),
        "--force-period",
        "1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("t ="), "{}", stderr(&o));
}

fn simulate(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--out-dir", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    snubber(&args)
}

#[test]
fn simulate_default_run_shows_harmonics() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulate(dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("contact duty fraction"));

    let read = |kind: &str| std::fs::read_to_string(dir.path().join(format!("snubber_{kind}.txt"))).unwrap();
    let harmonics = parse_harmonics(&read("harmonics")).unwrap();
    assert_eq!(harmonics.len(), 5);
    assert!(harmonics.iter().all(|h| h.present), "{harmonics:?}");

    let traj = TrajectoryTable::parse(&read("trajectory")).unwrap();
    assert_eq!(traj.t.len(), 8193);
    assert!(traj.meta.iter().any(|(k, v)| k == "kr" && v == "57140"));
    let spectrum = parse_spectrum(&read("spectrum")).unwrap();
    assert!(spectrum.normalized);
    assert_eq!(spectrum.len(), 2049);
}

#[test]
fn simulate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--elements", "4", "--t-end", "0.2", "--analysis", "0.1"];
    assert!(simulate(a.path(), &args).status.success());
    assert!(simulate(b.path(), &args).status.success());
    for kind in ["trajectory", "spectrum", "harmonics"] {
        let name = format!("snubber_{kind}.txt");
        assert_eq!(
            std::fs::read(a.path().join(&name)).unwrap(),
            std::fs::read(b.path().join(&name)).unwrap()
        );
    }
}

#[test]
fn simulate_with_ramp_force_file() {
    let dir = tempfile::tempdir().unwrap();
    let ramp = dir.path().join("ramp.txt");
    std::fs::write(&ramp, "# t, F\n0.0, 0.0\n0.5, 1.0\n").unwrap();
    let o = simulate(
        dir.path(),
        &[
            "--force-file",
            ramp.to_str().unwrap(),
            "--force-period",
            "1.0",
            "--prefix",
            "ramp",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for kind in ["trajectory", "spectrum", "harmonics"] {
        assert!(dir.path().join(format!("ramp_{kind}.txt")).exists());
    }
    let traj =
        TrajectoryTable::parse(&std::fs::read_to_string(dir.path().join("ramp_trajectory.txt")).unwrap()).unwrap();
    assert!((traj.force[4096] - 1.0).abs() < 1e-12);

    let o = simulate(dir.path(), &["--force-file", ramp.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    std::fs::write(&ramp, "0.0, 0.0\n0.5, oops\n").unwrap();
    let o = simulate(
        dir.path(),
        &["--force-file", ramp.to_str().unwrap(), "--force-period", "1"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn sweep_linear_finds_first_mode() {
    let dir = tempfile::tempdir().unwrap();
    let f1 = modal_column(&snubber(&["modal", "--k", "1"]), 2)[0];
    let o = snubber(&[
        "sweep",
        "--kr",
        "0",
        "--f-start",
        "10",
        "--f-end",
        "30",
        "--points",
        "13",
        "--rtol",
        "1e-5",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o)
        .lines()
        .find(|l| l.starts_with("resonance 1"))
        .unwrap()
        .to_string();
    let f: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
    let step = (30f64 / 10.0).powf(1.0 / 12.0);
    assert!(f > f1 / step && f < f1 * step, "{f} vs {f1}");
    let curve = parse_sweep(&std::fs::read_to_string(dir.path().join("snubber_sweep.txt")).unwrap()).unwrap();
    assert_eq!(curve.len(), 13);
}

#[test]
fn sweep_two_points_has_no_resonance() {
    let dir = tempfile::tempdir().unwrap();
    let o = snubber(&[
        "sweep",
        "--elements",
        "2",
        "--f-start",
        "100",
        "--f-end",
        "150",
        "--points",
        "2",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("no resonance"));
    let curve = parse_sweep(&std::fs::read_to_string(dir.path().join("snubber_sweep.txt")).unwrap()).unwrap();
    assert_eq!(curve.len(), 2);

    let o = snubber(&["sweep", "--f-start", "30", "--f-end", "20"]);
    assert_eq!(o.status.code(), Some(1));
}

fn spectrum_file(dir: &Path, name: &str, df: f64, peaks: &[(f64, f64)]) -> String {
    let n = (400.0 / df) as usize;
    let mut text = String::from("f_Hz, magnitude\n");
    for i in 0..=n {
        let f = i as f64 * df;
        let m = peaks.iter().find(|(pf, _)| (pf - f).abs() < 1e-9).map_or(1e-6, |p| p.1);
        text.push_str(&format!("{f}, {m}\n"));
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn compare_rows(o: &Output) -> Vec<(usize, f64, f64)> {
    stdout(o)
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn compare_reports_known_discrepancy() {
    let dir = tempfile::tempdir().unwrap();
    let peaks = [(32.0, 1.0), (64.0, 0.4), (96.0, 0.2)];
    let a = spectrum_file(dir.path(), "a.txt", 2.0, &peaks);
    let b = spectrum_file(dir.path(), "b.txt", 2.0, &[(32.0, 1.0), (64.0, 0.4), (96.0, 0.5)]);
    let coarse = spectrum_file(dir.path(), "c.txt", 4.0, &peaks);

    let same = snubber(&["compare", &a, &a, "--f0", "32", "--k-max", "3"]);
    assert!(same.status.success());
    assert!(compare_rows(&same).iter().all(|r| r.1 == 0.0 && r.2 == 1.0));

    let rows = compare_rows(&snubber(&["compare", &a, &b, "--f0", "32", "--k-max", "3"]));
    assert_eq!(rows[0].2, 1.0);
    assert_eq!(rows[1].2, 1.0);
    assert!((rows[2].2 - 2.5).abs() < 1e-3);

    let mixed = snubber(&["compare", &a, &coarse, "--f0", "32", "--k-max", "3"]);
    assert!(mixed.status.success(), "{}", stderr(&mixed));
    assert_eq!(compare_rows(&mixed).len(), 3);
}

#[test]
fn compare_parse_error_names_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let good = spectrum_file(dir.path(), "a.txt", 2.0, &[(32.0, 1.0)]);
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "f_Hz, magnitude\n0, 1\n2, ???\n").unwrap();
    let o = snubber(&["compare", &good, bad.to_str().unwrap(), "--f0", "32"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("bad.txt") && err.contains("line 3"), "{err}");
}
