use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dtl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dtl"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn dtl")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn asymptotics_passes_and_writes_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let o = dtl(
        dir.path(),
        &["asymptotics", "--out", "a.json", "--format", "both"],
    );
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).lines().any(|l| l.starts_with("PASS ")));
    let r = report(&dir.path().join("a.json"));
    assert_eq!(r["tool"], "dtl");
    assert_eq!(r["passed"], true);
    assert_eq!(r["converged"], true);
    assert_eq!(r["config"]["command"], "asymptotics");
    assert!(r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["pass"] == true));
    let csv = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert!(csv.lines().count() > 1);
}

#[test]
fn tolerance_flag_forms_reach_the_checks() {
    let dir = tempfile::tempdir().unwrap();
    let o = dtl(
        dir.path(),
        &["asymptotics", "--tol-slope", "1e-9", "--out", "a.json"],
    );
    assert_eq!(code(&o), 2, "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
    let r = report(&dir.path().join("a.json"));
    assert_eq!(r["passed"], false);
    assert_eq!(r["config"]["tolerances"]["slope"], 1e-9);
    let o = dtl(
        dir.path(),
        &["asymptotics", "--tol", "slope=1e-9", "--out", "b.json"],
    );
    assert_eq!(code(&o), 2);
    let o = dtl(
        dir.path(),
        &["asymptotics", "--tol-slope=0.5", "--out", "c.json"],
    );
    assert_eq!(code(&o), 0);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["asymptotics", "--grid-n", "12"],
        vec!["asymptotics", "--mass", "-1"],
        vec!["asymptotics", "--tol", "no_such_check=1"],
        vec!["asymptotics", "--tol", "slope=-1"],
        vec!["asymptotics", "--potential", "{\"kind\": "],
        vec!["no-such-command"],
        vec![
            "gap-scan",
            "--grid-n",
            "8",
            "--mass",
            "1",
            "--lambdas",
            "1.0",
        ],
    ] {
        let o = dtl(dir.path(), &args);
        assert_eq!(
            code(&o),
            1,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn report_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = dtl(
        dir.path(),
        &[
            "weyl",
            "--grid-n",
            "16",
            "--box-l",
            "6",
            "--lambda0",
            "1.5",
            "--n-max",
            "3",
            "--out",
            "w.json",
        ],
    );
    assert!(matches!(code(&o), 0 | 2), "{}", stdout(&o));
    let o2 = dtl(
        dir.path(),
        &["weyl", "--config", "w.json", "--out", "w2.json"],
    );
    assert_eq!(code(&o2), code(&o));
    let (a, b) = (
        report(&dir.path().join("w.json")),
        report(&dir.path().join("w2.json")),
    );
    assert_eq!(a["result"], b["result"]);
    assert_eq!(a["config"]["grid_n"], b["config"]["grid_n"]);
    // Flags still override the file.
    let o3 = dtl(
        dir.path(),
        &[
            "weyl", "--config", "w.json", "--n-max", "2", "--out", "w3.json",
        ],
    );
    assert!(matches!(code(&o3), 0 | 2));
    assert_eq!(
        report(&dir.path().join("w3.json"))["result"]
            .as_array()
            .unwrap()
            .len(),
        2
    );
}

#[test]
fn weyl_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let o = dtl(
        dir.path(),
        &[
            "weyl",
            "--grid-n",
            "16",
            "--box-l",
            "6",
            "--lambda0",
            "1.5",
            "--n-max",
            "3",
            "--out",
            "w.json",
            "--format",
            "csv",
        ],
    );
    assert!(matches!(code(&o), 0 | 2));
    let csv = std::fs::read_to_string(dir.path().join("w.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n_index,residual"));
    assert_eq!(lines.count(), 3);
    assert!(!dir.path().join("w.json").exists());
}

#[test]
fn spectrum_vectors_feed_decay_fit() {
    let dir = tempfile::tempdir().unwrap();
    let o = dtl(
        dir.path(),
        &[
            "spectrum",
            "--grid-n",
            "16",
            "--box-l",
            "5",
            "--operator",
            "sigma-d",
            "--target",
            "0.3",
            "--count",
            "2",
            "--save-vectors",
            "--out",
            "s.json",
            "--format",
            "both",
        ],
    );
    assert!(matches!(code(&o), 0 | 2), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("index,eigenvalue,residual"));
    let vec0 = dir.path().join("s.vec0.dtl");
    assert!(
        vec0.exists(),
        "{:?}",
        std::fs::read_dir(dir.path()).unwrap().collect::<Vec<_>>()
    );
    let o = dtl(
        dir.path(),
        &[
            "decay-fit",
            "--source",
            "field",
            "--field",
            vec0.to_str().unwrap(),
            "--out",
            "d.json",
        ],
    );
    assert!(
        matches!(code(&o), 0 | 2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = report(&dir.path().join("d.json"));
    assert!(r["result"]["fit"]["exponent"].is_number());
}

#[test]
fn potential_info_reports_decay_rate() {
    let dir = tempfile::tempdir().unwrap();
    let o = dtl(dir.path(), &["potential-info", "--out", "p.json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let r = report(&dir.path().join("p.json"));
    assert!(r["result"].is_object());
}
