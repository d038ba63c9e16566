use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_noma-secrecy"))
}

#[test]
fn analytic_prints_metrics() {
    let out = bin().arg("analytic").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let r0: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("R0 = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(r0 > 7.0 && r0 < 8.0);
    assert!(text.lines().any(|l| l.starts_with("OMA_SOP = ")));
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["sweep", "--no-mc", "--param", "lambda_e_db", "--values", "-50,-45,-40", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.path().join("custom.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(dir.path().join("custom_0.svg").exists());
}

#[test]
fn simulate_writes_records() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("r.txt");
    let out = bin()
        .args(["simulate", "--realizations", "20", "--seed", "5", "--records"])
        .arg(&records)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("n_realizations = 20"));
    assert_eq!(std::fs::read_to_string(&records).unwrap().lines().count(), 21);
}

#[test]
fn bad_input_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "a0 = 0.7\na1 = 0.3\n").unwrap();
    let out = bin().arg("analytic").arg("--config").arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("a0 < a1"));
    assert!(!bin().args(["figure", "fig9"]).status().unwrap().success());
    assert!(!bin().args(["figure", "fig2", "--no-mc", "--no-analytic"]).status().unwrap().success());
}
