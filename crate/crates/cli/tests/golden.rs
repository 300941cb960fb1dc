//! Byte-stable output of the `cartan` binary. Set `UPDATE_GOLDEN=1` to rewrite
//! the expected files after an intended change.

use std::path::{Path, PathBuf};
use std::process::Command;

fn dir(sub: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join(sub)
}

fn fixture(name: &str) -> String {
    dir("fixtures").join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_cartan")).args(args).output().expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let stderr = String::from_utf8(out.stderr).unwrap();
    (stdout, stderr, out.status.code().expect("exit code"))
}

fn golden(name: &str, args: &[&str], code: i32) -> String {
    let (stdout, stderr, got) = run(args);
    assert_eq!(got, code, "exit code for {args:?}; stderr: {stderr}");
    let path = dir("golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &stdout).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {name}"));
    assert_eq!(stdout, expected, "output of {args:?} differs from {name}");
    stdout
}

#[test]
fn verify_paper_default() {
    let out = golden("verify_paper.txt", &["verify-paper"], 0);
    assert!(out.contains("Eq. (3.8): VERIFIED"));
    let block: Vec<&str> = out.lines().skip_while(|l| !l.starts_with("Eq. (3.8)")).skip(1).take(5).collect();
    assert!(block.iter().enumerate().all(|(i, l)| l.starts_with(&format!("  d theta{}:", i + 1))), "{block:?}");
}

#[test]
fn verify_paper_empty_whitelist_fails() {
    let (out, _, code) = run(&["verify-paper", "--whitelist", &fixture("empty_whitelist.toml")]);
    assert_eq!(code, 1);
    assert!(out.contains("a6*a9"));
    assert!(out.contains("T4_14 (loop 1): DISCREPANCY"));
}

#[test]
fn verify_paper_gauge_json() {
    let (out, _, code) = run(&["verify-paper", "--mode", "gauge", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["summary"]["discrepancies"], 0);
    assert!(v["equations"].as_array().unwrap().iter().all(|e| e["problem"] == "gauge"));
}

#[test]
fn invariants_of_d3() {
    let out = golden("invariants_d3_direct.txt", &["invariants", &fixture("d3.op"), "--at", "0,1,0,0,5"], 0);
    assert!(out.contains("  I = 5\n"));
    golden("invariants_d3_gauge.txt", &["invariants", &fixture("d3.op"), "--mode", "gauge", "--at", "0,1,1,0,5"], 0);
}

#[test]
fn invariants_report_poles() {
    let (_, err, code) = run(&["invariants", &fixture("pole.op"), "--at", "0,1,0,0,5"]);
    assert_eq!(code, 3);
    assert!(err.contains("pole at x = 0"), "{err}");
}

#[test]
fn eval_perfect_cube() {
    let out = golden("eval_cube.txt", &["eval", "(f3*u)^(-1/3)", &fixture("d3.op"), "--at", "0,8,0,0,0"], 0);
    assert_eq!(out, "0.5\n");
}

#[test]
fn transform_outputs() {
    let out = golden("transform_d3_double.txt", &["transform", &fixture("d3.op"), &fixture("double.t")], 0);
    assert!(out.starts_with("f3 = 8\n"));
    let (same, _, _) = run(&["transform", &fixture("sample.op"), &fixture("identity.t"), "--mode", "gauge"]);
    assert_eq!(same, std::fs::read_to_string(fixture("sample.op")).unwrap());
    golden("transform_sample_seed3.txt", &["transform", &fixture("sample.op"), "--seed", "3"], 0);
}

#[test]
fn check_certificates() {
    golden(
        "check_shifted.txt",
        &["check", &fixture("d3.op"), &fixture("d3_shifted.op"), "--transform", &fixture("identity.t")],
        1,
    );
    let tmp = std::env::temp_dir().join(format!("cartan-golden-{}", std::process::id()));
    std::fs::create_dir_all(&tmp).unwrap();
    let t = tmp.join("seed7.t").to_string_lossy().into_owned();
    let (image, _, code) = run(&["transform", &fixture("sample.op"), "--seed", "7", "--mode", "gauge", "--emit-transform", &t]);
    assert_eq!(code, 0);
    let op2 = tmp.join("seed7.op");
    std::fs::write(&op2, image).unwrap();
    let (out, _, code) =
        run(&["check", &fixture("sample.op"), &op2.to_string_lossy(), "--mode", "gauge", "--transform", &t]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("certificate: verified"));
    std::fs::remove_dir_all(&tmp).unwrap();
}

#[test]
fn check_same_file_is_compatible() {
    let out = golden("check_same.txt", &["check", &fixture("d3.op"), &fixture("d3.op"), "--grid", "3"], 0);
    assert!(out.contains("verdict: Compatible"));
}

#[test]
fn usage_and_parse_errors() {
    assert_eq!(run(&["eval", "f3+", &fixture("d3.op"), "--at", "0,1,0,0,0"]).2, 2);
    assert_eq!(run(&["invariants", &fixture("d3.op"), "--at", "0,1,0"]).2, 2);
    assert_eq!(run(&["invariants", &fixture("missing.op")]).2, 2);
    assert_eq!(run(&["check", &fixture("d3.op"), &fixture("d3.op"), "--mode", "both"]).2, 2);
    assert_eq!(run(&["frobnicate"]).2, 2);
    let (_, err, code) = run(&["invariants", &fixture("bad.op")]);
    assert_eq!(code, 2);
    assert!(err.contains("2:"), "{err}");
}
