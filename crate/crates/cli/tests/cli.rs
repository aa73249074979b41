use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nhssh(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhssh"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn body(text: &str) -> String {
    text.lines().skip(1).collect::<Vec<_>>().join("\n")
}

#[test]
fn gap_csv_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nhssh(tmp.path(), &["gap"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(tmp.path().join("out/gap/gap.csv")).unwrap();
    assert!(text.starts_with("# run="));
    let gamma = 1.0 / 0.118;
    let mut n = 0;
    for line in text.lines().skip(2) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let w = f[1];
        let want = if 2.0 * w >= gamma { gamma / 2.0 } else { (gamma - (gamma * gamma - 4.0 * w * w).sqrt()) / 2.0 };
        assert!((f[2] - want).abs() <= 1e-9 * gamma, "{line}");
        n += 1;
    }
    assert_eq!(n, 41);
    assert!(tmp.path().join("out/gap/manifest.json").exists());
}

#[test]
fn spectrum_flux_mirror() {
    let tmp = tempfile::tempdir().unwrap();
    let dmipr = |flux: &str, out: &str| {
        let o = nhssh(tmp.path(), &["spectrum", "--flux", flux, "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(tmp.path().join(out).join("spectrum/metrics.json")).unwrap()).unwrap();
        v["data"]["dmipr"].as_f64().unwrap()
    };
    let (a, b) = (dmipr("+", "p"), dmipr("-", "m"));
    assert!(a * b < 0.0 && (a + b).abs() < 1e-9, "{a} {b}");
    let spec = fs::read_to_string(tmp.path().join("p/spectrum/spectrum.csv")).unwrap();
    assert_eq!(spec.lines().nth(1), Some("index,re_E_MHz,im_E_MHz"));
    assert_eq!(spec.lines().count(), 42);
}

#[test]
fn disorder_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |out: &str, seed: &str| {
        let o = nhssh(
            tmp.path(),
            &["disorder", "--kind", "position", "--realizations", "6", "--seed", seed, "--workers", "2", "--out", out],
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read_to_string(tmp.path().join(out).join("disorder/ensemble.csv")).unwrap()
    };
    let a = run("a", "5");
    let b = run("b", "5");
    let c = run("c", "6");
    assert_eq!(a, b);
    assert_ne!(body(&a), body(&c));
    let summary = fs::read_to_string(tmp.path().join("a/disorder/summary.json")).unwrap();
    assert!(summary.contains("\"mean_abs_dmipr\""));
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.json"), r#"{"lasers": {"I": {"rabi_2pi_mhz": 40}}}"#).unwrap();
    let o = nhssh(tmp.path(), &["--config", "bad.json", "gap"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lasers.I.rabi_2pi_mhz"));
    fs::write(tmp.path().join("typo.json"), r#"{"geometry": {"r1": 6}}"#).unwrap();
    let o = nhssh(tmp.path(), &["--config", "typo.json", "gap"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("geometry.r1"));
    let o = nhssh(tmp.path(), &["--config", "missing.json", "gap"]);
    assert_eq!(o.status.code(), Some(3));
    let o = nhssh(tmp.path(), &["validate", "--criteria", "11"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_round_trips_through_the_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nhssh(tmp.path(), &["config", "--boundary", "pbc"]);
    assert!(o.status.success());
    fs::write(tmp.path().join("c.json"), &o.stdout).unwrap();
    let again = nhssh(tmp.path(), &["--config", "c.json", "config"]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn validate_reports_pass_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nhssh(tmp.path(), &["validate", "--criteria", "1,5"]);
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 2, "{out}");
}

#[test]
fn sweep_and_winding_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nhssh(tmp.path(), &["sweep", "--kind", "position"]);
    assert!(o.status.success());
    let s = fs::read_to_string(tmp.path().join("out/sweep/sweep.csv")).unwrap();
    assert_eq!(s.lines().nth(1), Some("delta,k,abs_E,re_E,im_E,flagged"));
    assert_eq!(s.lines().count(), 2 + 21 * 4);
    let o = nhssh(tmp.path(), &["winding", "--kind", "phase", "--realizations", "3", "--boundary", "pbc"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let w = fs::read_to_string(tmp.path().join("out/winding/winding.csv")).unwrap();
    assert_eq!(w.lines().count(), 2 + 11);
}
