use assert_cmd::Command;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, Value) {
    let out = Command::cargo_bin("wachkit").unwrap().args(args).output().unwrap();
    let code = out.status.code().unwrap();
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, v)
}

#[test]
fn reduce_induced_example() {
    let (code, v) = run(&["reduce", "--p", "3", "--f", "2", "--weights", "2,1", "--l", "2,1,0,0"]);
    assert_eq!(code, 0);
    assert_eq!(v["exps"], serde_json::json!([75, 35]));
    assert_eq!(v["irreducible"], Value::Bool(true));
}

#[test]
fn classify_counts_two_classes() {
    let (code, v) = run(&["classify", "--p", "3", "--f", "2", "--weights", "2,1"]);
    assert_eq!(code, 0);
    assert_eq!(v["count"], 2);
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn enumerate_sweeps_sixteen_rows() {
    let (code, v) = run(&["enumerate", "--f", "2"]);
    assert_eq!(code, 0);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 16);
    for r in rows {
        let ordinary = matches!(r["class"].as_str().unwrap(), "C1" | "C2");
        assert_eq!(ordinary, r["trace_scalar"].as_bool().unwrap(), "{r}");
    }
}

#[test]
fn output_is_byte_identical() {
    let args = ["classify", "--p", "5", "--weights", "1,2,3"];
    let a = Command::cargo_bin("wachkit").unwrap().args(args).output().unwrap().stdout;
    let b = Command::cargo_bin("wachkit").unwrap().args(args).output().unwrap().stdout;
    assert_eq!(a, b);
}

#[test]
fn verification_reports_residual_orders() {
    let (code, v) = run(&["family-verify", "--p", "3", "--weights", "1,1", "--types", "1,2", "--prec-p", "6", "--prec-pi", "8"]);
    assert_eq!(code, 0);
    assert!(v["residual_orders"]["cocycle"].as_u64().unwrap() >= 8);
    let (code, v) = run(&["solve-gamma", "--p", "3", "--weights", "1,1", "--types", "1,2", "--prec-p", "5", "--prec-pi", "6"]);
    assert_eq!(code, 0);
    assert!(v["order"].as_u64().unwrap() >= 6);
    let (code, v) = run(&["char", "--p", "2", "--weights", "1,0,2", "--prec-pi", "8"]);
    assert_eq!(code, 0);
    assert_eq!(v["passes"], Value::Bool(true));
}

#[test]
fn precision_defaults_come_from_env() {
    let out = Command::cargo_bin("wachkit")
        .unwrap()
        .args(["family-build", "--p", "3", "--weights", "1,1", "--types", "1,2"])
        .env("WACHKIT_PREC_P", "5")
        .env("WACHKIT_PREC_PI", "6")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["precision"], serde_json::json!({"M": 5, "N": 6}));
}

#[test]
fn wadm_reads_stdin() {
    let module = r#"{"p":3,"f":1,"weights":[2],"frob":[[[3],[0]],[[0],[3]]],"x":[1],"y":[1],"form":"standard"}"#;
    let out = Command::cargo_bin("wachkit").unwrap().arg("wadm").write_stdin(module).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["verdict"]["admissible"].is_boolean());
}

#[test]
fn usage_errors_exit_one() {
    let out = Command::cargo_bin("wachkit").unwrap().args(["reduce", "--p", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let e: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(e["error"], "usage");
    let out = Command::cargo_bin("wachkit").unwrap().args(["family-build", "--p", "3", "--weights", "1,1", "--types", "1,1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::cargo_bin("wachkit").unwrap().arg("nonsense").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
