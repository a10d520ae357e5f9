use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_tfse");

fn tfse(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).current_dir(dir).output().expect("spawn tfse")
}

#[test]
fn table1_to_file_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = tfse(dir.path(), &["table1", "--alpha", "0.5", "--nsteps", "16,32", "--out", "t1.csv", "--plot"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("t1.csv")).unwrap();
    assert!(!text.contains('\r'));
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(reader.headers().unwrap(), vec!["alpha", "N", "M", "E_l", "rate_l", "E_g", "rate_g"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][1], "16");
    assert_eq!(&rows[0][2], "4");
    assert_eq!(&rows[0][4], "");
    let e1: f64 = rows[0][3].parse().unwrap();
    let e2: f64 = rows[1][3].parse().unwrap();
    let rate: f64 = rows[1][4].parse().unwrap();
    assert!(e1 > e2 && e2 > 0.0);
    assert!((rate - (e1 / e2).log2()).abs() < 1e-4);

    let svg = std::fs::read_to_string(dir.path().join("t1.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="series""#).count(), 1);
    assert_eq!(svg.matches(r#"class="guide""#).count(), 1);
}

#[test]
fn stdout_without_plot_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = tfse(dir.path(), &["probe-kernel", "--alpha", "0.3,0.7", "--nsteps", "8,16"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("alpha,gamma,N,probe_error,rate\n"));
    assert_eq!(text.lines().count(), 5);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["solve", "--alpha", "1.5"][..], &["bogus"], &["table1", "--backend", "dense", "--nsteps", "4096"]] {
        let out = tfse(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    }
    let out = tfse(dir.path(), &["solve", "--alpha", "1.5"]);
    assert!(String::from_utf8(out.stderr).unwrap().contains("alpha"));
}

#[test]
fn io_error_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = tfse(dir.path(), &["probe-kernel", "--nsteps", "4", "--out", "missing/dir/x.csv"]);
    assert_eq!(out.status.code(), Some(3));
    let out = tfse(dir.path(), &["probe-kernel", "--config", "nope.conf"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn numeric_failure_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = tfse(dir.path(), &["solve", "--nsteps", "64", "--mgrid", "8", "--memory-cap", "100"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn config_file_in_working_directory() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tfse.conf"), "alpha = 0.3\nnsteps = 8\n").unwrap();
    let out = tfse(dir.path(), &["probe-kernel"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("0.3,0.3,8,"));

    let out = tfse(dir.path(), &["probe-kernel", "--alpha", "0.7"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("0.7,0.7,8,"));

    std::fs::write(dir.path().join("tfse.conf"), "speed = 3\n").unwrap();
    let out = tfse(dir.path(), &["probe-kernel"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("speed"));
}

#[test]
fn two_mesh_labels_are_fine_step_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = tfse(dir.path(), &["two-mesh", "--example", "3", "--nsteps", "8,16", "--mgrid", "8"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let ns: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(ns, ["8", "16"]);
}
