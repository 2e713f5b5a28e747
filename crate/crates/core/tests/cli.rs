use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_beltrami"))
}

fn scenario(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> (i32, Option<Value>) {
    let status = bin()
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap();
    let report = std::fs::read_to_string(out.join(format!("{cmd}.json")))
        .ok()
        .map(|t| serde_json::from_str(&t).unwrap());
    (status.status.code().unwrap(), report)
}

const SHEAR: &str = "[grid]\nnx = 16\nny = 16\nnz = 32\n[field]\nfamily = \"shear\"\nalpha = 2.0\n[params]\nmu = -1.0\n";

#[test]
fn verify_beltrami_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let shear = scenario(dir.path(), "shear.toml", SHEAR);
    let (code, rep) = run("verify-beltrami", &shear, &dir.path().join("a"), &[]);
    assert_eq!(code, 0);
    let rep = rep.unwrap();
    assert!(rep["result"]["residuals"]["curl_minus_alpha_u"].as_f64().unwrap() < 1e-5);
    assert_eq!(rep["scenario"]["params"]["alpha"].as_f64(), Some(2.0));

    let vertical = scenario(dir.path(), "v.toml", "[field]\nfamily = \"constant\"\nvalue = [0.0, 0.0, 1.0]\n");
    let (code, rep) = run("verify-beltrami", &vertical, &dir.path().join("b"), &[]);
    assert_eq!(code, 1);
    assert_eq!(rep.unwrap()["result"]["residuals"]["bottom_normal"].as_f64(), Some(1.0));

    let broken = scenario(dir.path(), "bad.toml", "[grid\nnx = ");
    let (code, _) = run("verify-beltrami", &broken, &dir.path().join("c"), &[]);
    assert_eq!(code, 2);
    let (code, _) = run("verify-beltrami", &dir.path().join("missing.toml"), &dir.path().join("c"), &[]);
    assert_eq!(code, 2);
    let out = bin().arg("no-such-command").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tolerance_scale_can_fail_a_pass() {
    let dir = tempfile::tempdir().unwrap();
    let shear = scenario(dir.path(), "shear.toml", "[field]\nfamily = \"shear\"\nalpha = 2.0\n");
    let (code, _) = run("verify-beltrami", &shear, &dir.path().join("a"), &["--tolerance-scale", "1e-12"]);
    assert_eq!(code, 1);
}

#[test]
fn zero_field_potential_dump() {
    let dir = tempfile::tempdir().unwrap();
    let zero = scenario(dir.path(), "zero.toml", "[grid]\nnx = 8\nny = 8\nnz = 8\n");
    let out = dir.path().join("z");
    let (code, rep) = run("construct-potential", &zero, &out, &[]);
    assert_eq!(code, 0);
    assert_eq!(rep.unwrap()["result"]["dump"], "potential.bwf");
    let bytes = std::fs::read(out.join("potential.bwf")).unwrap();
    let body = &bytes[bytes.iter().position(|b| *b == b'\n').unwrap() + 1..];
    assert_eq!(body.len(), 3 * 8 * 8 * 8 * 9);
    assert!(body.iter().all(|b| *b == 0));
}

#[test]
fn dump_and_reload_as_field_file() {
    let dir = tempfile::tempdir().unwrap();
    let shear = scenario(dir.path(), "shear.toml", SHEAR);
    let out = dir.path().join("d");
    let (code, rep) = run("dump-fields", &shear, &out, &["--csv"]);
    assert_eq!(code, 0);
    assert_eq!(rep.unwrap()["result"]["files"].as_array().unwrap().len(), 3);
    let csv = std::fs::read_to_string(out.join("velocity.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 16 * 16 * 33);
    let from_file = format!(
        "[grid]\nnx = 16\nny = 16\nnz = 32\n[params]\nalpha = 2.0\n[field]\nfamily = \"file\"\npath = \"{}\"\n",
        out.join("velocity.bwf").display()
    );
    let cfg = scenario(dir.path(), "file.toml", &from_file);
    let (code, _) = run("verify-beltrami", &cfg, &dir.path().join("e"), &[]);
    assert_eq!(code, 0);
    // mismatched grid is a configuration error
    let wrong = from_file.replace("nz = 32", "nz = 16");
    let cfg = scenario(dir.path(), "wrong.toml", &wrong);
    let (code, _) = run("verify-beltrami", &cfg, &dir.path().join("f"), &[]);
    assert_eq!(code, 2);
}

#[test]
fn check_variational_verdicts_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let shear = scenario(dir.path(), "shear.toml", SHEAR);
    let (code, rep) = run("check-variational", &shear, &dir.path().join("a"), &["--num-variations", "3", "--seed", "7"]);
    assert_eq!(code, 0);
    let rep = rep.unwrap();
    assert_eq!(rep["result"]["verdict"], "critical");
    assert_eq!(rep["result"]["variations"].as_array().unwrap().len(), 3);

    let (_, again) = run(
        "check-variational",
        &shear,
        &dir.path().join("b"),
        &["--num-variations", "3", "--seed", "7", "--threads", "2"],
    );
    let a = std::fs::read(dir.path().join("a/check-variational.json")).unwrap();
    let b = std::fs::read(dir.path().join("b/check-variational.json")).unwrap();
    assert_eq!(a, b);
    assert!(again.is_some());

    let modal = scenario(
        dir.path(),
        "modal.toml",
        "[grid]\nnx = 16\nny = 16\nnz = 32\n[field]\nfamily = \"modal\"\nk = [1.0, 0.0]\nm = 1\n[params]\nmu = -0.5\n",
    );
    let (code, rep) = run("check-variational", &modal, &dir.path().join("c"), &["--num-variations", "2"]);
    assert_eq!(code, 0);
    assert_eq!(rep.unwrap()["result"]["verdict"], "not critical");
}
