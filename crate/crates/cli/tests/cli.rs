use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_posetinfo"))
        .current_dir(manifest_dir())
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

/// Fields that legitimately differ between builds.
const VOLATILE: &[&str] = &["version", "parallel_available"];

fn assert_matches(got: &Value, want: &Value, path: &str) {
    match (got, want) {
        (Value::Number(a), Value::Number(b)) => {
            let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{path}: {a} vs {b}");
        }
        (Value::Object(a), Value::Object(b)) => {
            let keys = |m: &serde_json::Map<String, Value>| -> Vec<String> {
                m.keys().filter(|k| !VOLATILE.contains(&k.as_str())).cloned().collect()
            };
            assert_eq!(keys(a), keys(b), "{path}: keys differ");
            for k in keys(a) {
                assert_matches(&a[&k], &b[&k], &format!("{path}.{k}"));
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            assert_eq!(a.len(), b.len(), "{path}: lengths differ");
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                assert_matches(x, y, &format!("{path}[{i}]"));
            }
        }
        _ => assert_eq!(got, want, "{path}"),
    }
}

/// Compares against `tests/golden/<name>.json`; `UPDATE_GOLDEN=1` rewrites it.
fn golden(name: &str, args: &[&str]) {
    let got = report(args);
    let path = manifest_dir().join("tests/golden").join(format!("{name}.json"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, serde_json::to_string_pretty(&got).unwrap() + "\n").unwrap();
        return;
    }
    let want: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_matches(&got, &want, name);
}

#[test]
fn golden_transaction_model() {
    golden("learn_transactions", &["learn", "--transactions", "tests/data/transactions.txt", "--sigma", "0.2"]);
}

#[test]
fn golden_transaction_gain_scan() {
    golden("gain_scan_transactions", &["gain-scan", "--input", "tests/data/transaction_model.json", "--parallel", "1"]);
}

#[test]
fn golden_mutual_information() {
    golden(
        "mi_chain",
        &["mi", "--input", "tests/data/joint_table.json", "--subset", "2|3", "--chain", "∅;3;2|3;ALL"],
    );
}

#[test]
fn golden_integer_vectors() {
    golden("learn_int_vectors", &["learn", "--int-vectors", "tests/data/int_vectors.csv", "--sigma", "0.08"]);
}

#[test]
fn transaction_gains_and_decomposition() {
    let scan = report(&["gain-scan", "--input", "tests/data/transaction_model.json"]);
    let gains: Vec<f64> = scan["rows"].as_array().unwrap().iter().map(|r| r["gain"].as_f64().unwrap()).collect();
    for (g, want) in gains.iter().zip([0.0523, 0.0170, 0.0040]) {
        assert!((g - want).abs() < 1e-4);
    }
    let dec = report(&["decompose", "--input", "tests/data/diamond.json", "--chain", "∅;x1;ALL"]);
    let terms = dec["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 2);
    let total = dec["total"].as_f64().unwrap();
    assert!((total - dec["kl_p_q"].as_f64().unwrap()).abs() < 1e-9);
    assert!((total - 0.10644).abs() < 1e-5);
}

#[test]
fn learned_model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let model_arg = model.to_str().unwrap();
    let out = run(&["learn", "--transactions", "tests/data/transactions.txt", "--sigma", "0.2", "--output", model_arg]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();

    let coords = report(&["coords", "--input", model_arg]);
    assert_eq!(coords["p"], written["p"]);

    let text = std::fs::read_to_string(manifest_dir().join("tests/data/transactions.txt")).unwrap();
    let data = posetinfo::learn::TransactionDataset::parse(&text).unwrap();
    let direct = posetinfo::learn::learn_from_transactions(&data, 0.2, posetinfo::Parallelism::Sequential).unwrap();
    let theta = direct.phat.theta();
    for x in direct.poset.elements() {
        let got = coords["theta"][direct.poset.label(x)].as_f64().unwrap();
        assert_eq!(got.to_bits(), theta.get(x).to_bits());
    }
}

#[test]
fn cluster_learning() {
    let r = report(&[
        "learn",
        "--clusters",
        "tests/data/clusters.json",
        "--points",
        "tests/data/cluster_points.csv",
        "--sigma",
        "0.2",
    ]);
    assert_eq!(r["poset"]["elements"], serde_json::json!(["⊥", "a", "b", "c"]));
    assert_eq!(r["counts"]["a"], 10);
    assert!(r["repair"].is_object());
}

#[test]
fn parallel_degree_does_not_change_reports() {
    let args = |par: &'static str| ["metric", "--input", "tests/data/diamond.json", "--parallel", par];
    let mut a = report(&args("1"));
    let mut b = report(&args("3"));
    a["config"] = Value::Null;
    b["config"] = Value::Null;
    assert_eq!(a, b);
}

fn status(args: &[&str]) -> (i32, Value) {
    let out = run(args);
    let err: Value = serde_json::from_slice(&out.stderr).unwrap_or(Value::Null);
    (out.status.code().unwrap(), err)
}

#[test]
fn exit_codes() {
    let (code, err) = status(&["project", "--input", "tests/data/diamond.json", "--subset", "nope"]);
    assert_eq!(code, 1);
    assert_eq!(err["error"]["kind"], "invalid_input");

    let (code, err) = status(&[
        "project",
        "--input",
        "tests/data/diamond.json",
        "--subset",
        "x1",
        "--max-outer",
        "1",
        "--theta-tol",
        "1e-300",
    ]);
    assert_eq!(code, 2);
    assert_eq!(err["error"]["kind"], "solver_failure");

    let (code, err) = status(&["learn", "--transactions", "tests/data/transactions.txt", "--sigma", "1.5"]);
    assert_eq!(code, 1);
    assert_eq!(err["error"]["source"], "tests/data/transactions.txt");

    let (code, _) = status(&["coords", "--input", "tests/data/transactions.txt"]);
    assert_eq!(code, 1);
    let (code, _) = status(&["coords", "--input", "tests/data/missing.json"]);
    assert_eq!(code, 1);
    let (code, _) = status(&["no-such-command"]);
    assert_eq!(code, 1);
    assert!(run(&["--help"]).status.success());
}

#[test]
fn gtest_needs_a_sample_size() {
    let (code, err) = status(&["gtest", "--input", "tests/data/diamond.json", "--subset", "x1"]);
    assert_eq!(code, 1);
    assert!(err["error"]["message"].as_str().unwrap().contains("sample size"));
    let r = report(&["gtest", "--input", "tests/data/diamond.json", "--subset", "x1", "--n", "10"]);
    assert!((r["lambda"].as_f64().unwrap() - 1.046).abs() < 2e-3);
    assert_eq!(r["dof"], 3);
}
