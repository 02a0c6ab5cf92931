use std::path::Path;
use std::process::{Command, Output};

fn subdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subdiff"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const MANUFACTURED_STUDY: &str = r#"{
    "problem": {"mu": 1.0, "beta": 0.5, "model": {"manufactured": {"sigma": 1.5}}},
    "scheme": "linear_p1",
    "degree": 24,
    "tau_grid": [0.125, 0.0625, 0.03125],
    "reference": "exact"
}"#;

#[test]
fn version_flag() {
    let o = subdiff(&["--version"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o).trim(),
        format!("subdiff {}", env!("CARGO_PKG_VERSION"))
    );
}

#[test]
fn weights_printed_with_17_digits() {
    let o = subdiff(&["weights", "--beta", "0.5", "--count", "2"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "1.0000000000000000\n-0.50000000000000000\n-0.12500000000000000\n"
    );

    let o = subdiff(&[
        "weights", "--beta", "0.5", "--count", "1", "--kind", "kernel", "--tau", "0.25",
    ]);
    assert_eq!(stdout(&o), "0.50000000000000000\n0.25000000000000000\n");

    let o = subdiff(&["weights", "--beta", "0.5", "--count", "3", "--kind", "b"]);
    let last: f64 = stdout(&o).lines().last().unwrap().parse().unwrap();
    assert!((last - 0.3125).abs() < 1e-16);
}

#[test]
fn weights_reject_bad_order() {
    let o = subdiff(&["weights", "--beta", "1.5", "--count", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mittag_leffler_value() {
    let o = subdiff(&["mlf", "--beta", "1", "--z", "1"]);
    assert_eq!(stdout(&o).trim(), "2.71828182845905");
    let o = subdiff(&["mlf", "--beta", "0.5", "--z", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_dumps_nodal_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "solve.json",
        r#"{"problem": {"mu": 1.0, "beta": 0.5, "model": {"manufactured": {"sigma": 1.5}}},
            "scheme": {"kind": "linear_p2", "n_steps": 32}, "degree": 16}"#,
    );
    let dump = dir.path().join("u.csv");
    let o = subdiff(&[
        "solve",
        "--config",
        &cfg,
        "--dump-solution",
        dump.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&dump).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,u");
    assert_eq!(lines.len(), 1 + 17);
    let mid: Vec<f64> = lines[9].split(',').map(|v| v.parse().unwrap()).collect();
    // u(0, 1) = 2 sin(0) = 0, u at the node next to it follows 2 sin(πx)
    assert!(mid[0].abs() < 1e-14 && mid[1].abs() < 1e-3);
    let x: f64 = lines[10].split(',').next().unwrap().parse().unwrap();
    let u: f64 = lines[10].split(',').nth(1).unwrap().parse().unwrap();
    assert!((u - 2.0 * (std::f64::consts::PI * x).sin()).abs() < 1e-3);
}

#[test]
fn solve_divergence_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "blowup.json",
        r#"{"problem": {"mu": 1.0, "beta": 0.5, "final_time": 5,
                        "model": {"reaction": {"initial": {"sine": {"frequency": 1}}, "coefficients": [0, 0, 10]}}},
            "scheme": {"kind": "semi_implicit1", "n_steps": 64}, "degree": 16}"#,
    );
    let o = subdiff(&["solve", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("diverged"));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write(
        dir.path(),
        "typo.json",
        &MANUFACTURED_STUDY.replace("\"degree\"", "\"degre\""),
    );
    let out = dir.path().join("r.csv");
    let o = subdiff(&[
        "converge",
        "--config",
        &typo,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = subdiff(&[
        "solve",
        "--config",
        dir.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = subdiff(&["verify", "--suite", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn converge_writes_reports_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "study.json", MANUFACTURED_STUDY);
    let csv = dir.path().join("r.csv");
    let json = dir.path().join("r.json");
    let o = subdiff(&[
        "converge",
        "--config",
        &cfg,
        "--out",
        csv.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read(&csv).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "tau,l2_error,order");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].ends_with(','));
    let order: f64 = lines[3].rsplit(',').next().unwrap().parse().unwrap();
    assert!((order - 1.0).abs() < 0.15);

    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["metadata"]["software_version"], env!("CARGO_PKG_VERSION"));

    subdiff(&["converge", "--config", &cfg, "--out", csv.to_str().unwrap()]);
    assert_eq!(std::fs::read(&csv).unwrap(), first);
}

#[test]
fn verify_identity_report() {
    let o = subdiff(&["verify", "--suite", "identity", "--seed", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("check_name,parameters,slack_or_residual,pass")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9);
    assert!(rows
        .iter()
        .all(|r| r.starts_with("kernel_identity,") && r.ends_with(",true")));
}
