mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::json;

fn rmu(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rmu"));
    cmd.args(args).env_remove("RMU_THREADS");
    if let Some(t) = threads {
        cmd.env("RMU_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_accepts_a_good_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::write(dir.path(), "ok.json", &common::small_config());
    let out = rmu(&["validate", s(&path)], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("config is valid"));
}

#[test]
fn validation_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut unknown = common::small_config();
    unknown["grid"]["spacing"] = json!(0.1);
    let mut order = common::small_config();
    order["delta"] = json!(0.75);
    let mut negative = common::small_config();
    negative["kernel"] = json!({"id": "sign_first_coord"});
    for (name, cfg) in [("unknown", &unknown), ("order", &order)] {
        let path = common::write(dir.path(), name, cfg);
        assert_eq!(code(&rmu(&["validate", s(&path)], None)), 2, "{name}");
        assert_eq!(code(&rmu(&["run", s(&path)], None)), 2, "{name}");
    }
    // The kernel screen rejects the negative example in `validate` only.
    let path = common::write(dir.path(), "negative", &negative);
    let out = rmu(&["validate", s(&path)], None);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("fails the kernel screen"));
    assert_eq!(code(&rmu(&["run", s(&dir.path().join("missing.json"))], None)), 2);
    assert_eq!(code(&rmu(&["validate", s(&path)], Some("many"))), 2);
}

#[test]
fn run_writes_reports_and_diff_compares_them() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = common::small_config();
    cfg["experiments"] = json!(["strong_type"]);
    let path = common::write(dir.path(), "strong.json", &cfg);
    let out_a = dir.path().join("a");
    let out = rmu(&["run", s(&path), "--output", s(&out_a)], Some("2"));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let json_a = out_a.join("strong_type.json");
    assert!(json_a.exists() && out_a.join("strong_type.csv").exists());

    let same = rmu(&["report-diff", s(&json_a), s(&json_a)], None);
    assert_eq!(code(&same), 0);
    assert!(String::from_utf8_lossy(&same.stdout).contains("summaries identical"));

    cfg["p_values"] = json!([2.0]);
    let path_b = common::write(dir.path(), "strong_b.json", &cfg);
    let out_b = dir.path().join("b");
    assert_eq!(code(&rmu(&["run", s(&path_b), "--output", s(&out_b)], None)), 0);
    let diff = rmu(&["report-diff", s(&json_a), s(&out_b.join("strong_type.json"))], None);
    assert_eq!(code(&diff), 0);
    assert!(String::from_utf8_lossy(&diff.stdout).contains("case only in first"));

    let missing = rmu(&["report-diff", s(&json_a), s(&dir.path().join("nope.json"))], None);
    assert_eq!(code(&missing), 3);
}
