use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_timebin-sim"))
        .args(args)
        .arg("--out-dir")
        .arg(out_dir)
        .env_remove("TIMEBIN_SIM_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing in\n{text}"))
        .parse()
        .unwrap()
}

/// Values of `key` in every `key=value` line, in order.
fn report_values(text: &str, key: &str) -> Vec<f64> {
    text.lines().filter_map(|l| l.strip_prefix(&format!("{key}="))).map(|v| v.parse().unwrap()).collect()
}

#[test]
fn correlate_reports_c_near_four() {
    let dir = tempfile::tempdir().unwrap();
    let reference = config("reference.ini");
    let o = run(&["correlate", reference.to_str().unwrap(), "--gates", "1e7"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("correlate_report.txt")).unwrap();
    let c = report_value(&report, "C");
    assert!((c - 4.0).abs() <= 0.5, "{report}");
    let frac = report_value(&report, "fraction_i");
    assert!((frac - 0.45).abs() < 0.1, "{report}");
    let manifest = fs::read_to_string(dir.path().join("run_manifest.txt")).unwrap();
    assert!(manifest.contains("output=") && manifest.contains("seed="), "{manifest}");
    let hash = manifest.lines().find_map(|l| l.strip_prefix("input_hash=")).unwrap();
    assert_eq!(hash.len(), 64);
    let csv = fs::read_to_string(dir.path().join("histogram.csv")).unwrap();
    assert!(csv.contains(&format!("# config_hash={hash}")));
}

#[test]
fn same_seed_gives_identical_files() {
    let reference = config("reference.ini");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = run(&["correlate", reference.to_str().unwrap(), "--gates", "2000000", "--seed", "17"], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        let o = run(&["fringe", reference.to_str().unwrap(), "--points", "8", "--gates-per-point", "1e6", "--seed", "17"], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for name in ["histogram.csv", "correlate_report.txt", "scan.csv", "fringe_report.txt"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let reference = config("reference.ini");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let o = run(&["--threads", "1", "correlate", reference.to_str().unwrap(), "--gates", "1000000"], a.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_timebin-sim"))
        .args(["correlate", reference.to_str().unwrap(), "--gates", "1000000", "--out-dir"])
        .arg(b.path())
        .env("TIMEBIN_SIM_THREADS", "3")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(a.path().join("histogram.csv")).unwrap(), fs::read(b.path().join("histogram.csv")).unwrap());
}

#[test]
fn fit_round_trips_fringe_output() {
    let dir = tempfile::tempdir().unwrap();
    let reference = config("reference.ini");
    let o = run(&["fringe", reference.to_str().unwrap(), "--points", "20", "--gates-per-point", "1e7"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let fringe_report = fs::read_to_string(dir.path().join("fringe_report.txt")).unwrap();
    let scan = dir.path().join("scan.csv");
    let fit_dir = tempfile::tempdir().unwrap();
    let o = run(&["fit", scan.to_str().unwrap()], fit_dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let fit_report = fs::read_to_string(fit_dir.path().join("fit_report.txt")).unwrap();
    let (before, after) = (report_values(&fringe_report, "visibility"), report_values(&fit_report, "visibility"));
    assert_eq!(before.len(), 2);
    assert_eq!(after.len(), 2);
    for (x, y) in before.iter().zip(&after) {
        assert!((x - y).abs() < 1e-9, "{x} vs {y}");
    }
    let v_raw = before[0];
    assert!((v_raw - 0.614).abs() < 0.1, "{fringe_report}");
}

#[test]
fn synthetic_full_visibility_scan() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("theta_rad,rate,rate_err,singles\n");
    for k in 0..12 {
        let theta = std::f64::consts::TAU * k as f64 / 12.0;
        let rate = 1e-4 * (1.0 + theta.cos());
        csv.push_str(&format!("{theta},{rate},1e-6,1e-3\n"));
    }
    let path = dir.path().join("synthetic.csv");
    fs::write(&path, csv).unwrap();
    let o = run(&["fit", path.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let v = report_value(&String::from_utf8_lossy(&o.stdout), "visibility");
    assert!((v - 1.0).abs() < 5e-4, "{v}");
}

#[test]
fn truncated_scan_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("# accidental_estimate=1e-7\ntheta_rad,rate,rate_err,singles\n");
    for k in 0..6 {
        csv.push_str(&format!("{},1e-5,1e-6,1e-3\n", k as f64));
    }
    csv.push_str("6.1,2e-5");
    let path = dir.path().join("scan.csv");
    fs::write(&path, csv).unwrap();
    let o = run(&["fit", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 9"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let reference = config("reference.ini");
    let r = reference.to_str().unwrap();
    for args in [
        vec!["correlate", r, "--gates", "0"],
        vec!["fringe", r, "--points", "4"],
        vec!["correlate", "/nonexistent/config.ini"],
        vec!["--threads", "0", "correlate", r, "--gates", "10"],
        vec!["sweep", r],
        vec!["bogus"],
    ] {
        let o = run(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn bad_config_line_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("reference.ini")).unwrap().replace("efficiency = 0.080", "efficiency = 0.080\ncolour = blue");
    let path = dir.path().join("bad.ini");
    fs::write(&path, text).unwrap();
    let o = run(&["correlate", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
}

#[test]
fn inconsistent_config_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("reference.ini")).unwrap().replacen("delay_ns = 1.0", "delay_ns = 1.2", 1);
    let path = dir.path().join("mismatch.ini");
    fs::write(&path, text).unwrap();
    let o = run(&["fringe", path.to_str().unwrap(), "--gates-per-point", "1000"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn sweep_writes_one_row_per_power() {
    let dir = tempfile::tempdir().unwrap();
    let reference = config("reference.ini");
    let o = run(&["sweep", reference.to_str().unwrap(), "--powers", "0.2,0.5,1.0", "--mc", "--gates", "1e7"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "P,mu_i,C,frac_s,frac_i,C_mc,C_mc_err");
    assert_eq!(lines.len(), 4);
    let last: Vec<f64> = lines[3].split(',').map(|f| f.parse().unwrap()).collect();
    assert!((last[1] - 0.13).abs() < 0.01 && (last[2] - 4.0).abs() < 0.5, "{csv}");
}
