use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn sdfeas(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("sdfeas").chain(args.iter().copied());
    let code = sdfeas_cli::run(argv, &mut out, &mut err);
    Run { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_line(s: &str) -> Value {
    serde_json::from_str(s.lines().next().expect("one line of output")).unwrap()
}

#[test]
fn binary_exit_codes_follow_the_status() {
    let bin = env!("CARGO_BIN_EXE_sdfeas");
    let code = |f: &str| Command::new(bin).arg("classify").arg(fixture(f)).output().unwrap().status.code();
    assert_eq!(code("two_direction.json"), Some(2));
    assert_eq!(code("identity.json"), Some(0));
    assert_eq!(code("malformed.json"), Some(65));
}

#[test]
fn two_direction_family_is_weakly_infeasible() {
    let r = sdfeas(&["classify", path_str(&fixture("two_direction.json"))]);
    assert_eq!(r.code, 2);
    assert!(r.stdout.contains(": WeaklyInfeasible\n"), "{}", r.stdout);
    assert!(r.stdout.contains("level 1:"), "{}", r.stdout);
}

#[test]
fn malformed_document_reports_line_and_column() {
    let r = sdfeas(&["classify", path_str(&fixture("malformed.json"))]);
    assert_eq!(r.code, 65);
    assert!(r.stderr.contains("malformed.json: 6:16:"), "{}", r.stderr);
    assert!(r.stdout.is_empty());
}

#[test]
fn semantic_document_errors_exit_65() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"format": "sdfeas-problem", "version": 1, "n": 2, "span": [], "c": [1, 0]}"#,
        r#"{"format": "sdfeas-problem", "version": 2, "n": 2, "span": [], "c": [1, 0, 1]}"#,
        r#"{"format": "sdfeas-problem", "version": 1, "n": 2, "span": [[1, 0]], "c": [1, 0, 1]}"#,
        r#"{"format": "sdfeas-problem", "version": 1, "n": 1, "equations": [{"a": [1], "b": 1}, {"a": [2], "b": 3}]}"#,
        r#"{"format": "sdfeas-problem", "version": 1, "n": 2, "span": [], "c": [1, 0, 1], "extra": 0}"#,
    ];
    for (i, text) in cases.iter().enumerate() {
        let p = dir.path().join(format!("bad{i}.json"));
        std::fs::write(&p, text).unwrap();
        let r = sdfeas(&["classify", path_str(&p)]);
        assert_eq!(r.code, 65, "case {i}: {}", r.stderr);
    }
}

#[test]
fn all_input_forms_give_the_same_answer() {
    let mut levels = Vec::new();
    for f in ["canonical.json", "canonical_equations.json", "canonical.dat-s"] {
        let r = sdfeas(&["classify", "--json", path_str(&fixture(f))]);
        assert_eq!(r.code, 2, "{f}: {}", r.stderr);
        levels.push(json_line(&r.stdout)["levels"].clone());
    }
    assert_eq!(levels[0], levels[1]);
    assert_eq!(levels[0], levels[2]);
}

#[test]
fn classify_then_verify_round_trip_on_generated_instances() {
    let dir = tempfile::tempdir().unwrap();
    for (status, code) in [("sf", 0), ("wf", 1), ("wi", 2), ("si", 3)] {
        for (n, seed) in [("3", "1"), ("5", "4")] {
            let g = sdfeas(&["generate", "--status", status, "--n", n, "--seed", seed]);
            assert_eq!(g.code, 0, "{}", g.stderr);
            let doc = dir.path().join(format!("{status}{n}.json"));
            std::fs::write(&doc, &g.stdout).unwrap();
            let cert = dir.path().join(format!("{status}{n}.cert"));
            let c = sdfeas(&["classify", path_str(&doc), "--cert", path_str(&cert)]);
            assert_eq!(c.code, code, "{status} n={n}: {}", c.stdout);
            let v = sdfeas(&["verify", path_str(&doc), path_str(&cert)]);
            assert_eq!(v.code, 0, "{status} n={n}: {}{}", v.stdout, v.stderr);
        }
    }
}

#[test]
fn a_json_report_verifies_without_solving_again() {
    let dir = tempfile::tempdir().unwrap();
    let doc = fixture("two_direction.json");
    let r = sdfeas(&["classify", "--json", path_str(&doc)]);
    let report = dir.path().join("report.json");
    std::fs::write(&report, &r.stdout).unwrap();
    let parsed = json_line(&r.stdout);
    assert_eq!(parsed["chain"].as_array().unwrap().len(), 2);
    let v = sdfeas(&["verify", path_str(&doc), path_str(&report)]);
    assert_eq!(v.code, 0, "{}", v.stderr);
}

fn certificate_for(dir: &Path, doc: &Path) -> (PathBuf, Value) {
    let cert = dir.join("c.cert");
    sdfeas(&["classify", path_str(doc), "--cert", path_str(&cert)]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    (cert, v)
}

#[test]
fn tampered_certificate_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let g = sdfeas(&["generate", "--status", "si", "--n", "3", "--seed", "2"]);
    let doc = dir.path().join("si.json");
    std::fs::write(&doc, &g.stdout).unwrap();
    let (cert, mut env) = certificate_for(dir.path(), &doc);
    assert_eq!(sdfeas(&["verify", path_str(&doc), path_str(&cert)]).code, 0);

    // -s is negative semidefinite and has the wrong inner product with c.
    for v in env["certificate"]["s"]["upper"].as_array_mut().unwrap() {
        *v = Value::from(-v.as_f64().unwrap());
    }
    std::fs::write(&cert, env.to_string()).unwrap();
    let r = sdfeas(&["verify", path_str(&doc), path_str(&cert)]);
    assert_eq!(r.code, 70);
    assert!(r.stdout.contains("invalid"));
}

#[test]
fn claimed_status_must_match_the_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let doc = fixture("identity.json");
    let (cert, mut env) = certificate_for(dir.path(), &doc);
    env["status"] = Value::from("WeaklyFeasible");
    std::fs::write(&cert, env.to_string()).unwrap();
    assert_eq!(sdfeas(&["verify", path_str(&doc), path_str(&cert)]).code, 70);
}

#[test]
fn mismatched_dimensions_are_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    for (from, to) in [("two_direction.json", "canonical.json"), ("identity.json", "canonical.json")] {
        let (cert, _) = certificate_for(dir.path(), &fixture(from));
        let r = sdfeas(&["verify", path_str(&fixture(to)), path_str(&cert)]);
        assert_eq!(r.code, 65, "{from} on {to}: {}", r.stderr);
    }
    let r = sdfeas(&["verify", path_str(&fixture("canonical.json")), path_str(&fixture("malformed.json"))]);
    assert_eq!(r.code, 65);
}

#[test]
fn approach_on_the_canonical_pair() {
    let r = sdfeas(&["approach", "--json", path_str(&fixture("canonical.json")), "--eps", "1e-3"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json_line(&r.stdout);
    let alphas = v["alphas"].as_array().unwrap();
    assert_eq!(alphas.len(), 1);
    let a = alphas[0].as_f64().unwrap();
    // dist([[a, 1], [1, 0]]) ≈ 1/a, so eps = 1e-3 needs a ≈ 1e3.
    assert!((500.0..=2000.0).contains(&a), "{a}");
    assert!(v["distance"].as_f64().unwrap() < 1e-3);
}

#[test]
fn approach_needs_both_directions_on_the_not_directional_family() {
    let r = sdfeas(&["approach", "--json", path_str(&fixture("not_directional.json")), "--eps", "1e-2"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json_line(&r.stdout);
    let alphas: Vec<f64> = v["alphas"].as_array().unwrap().iter().map(|a| a.as_f64().unwrap()).collect();
    assert_eq!(alphas.len(), 2);
    assert!(alphas[0] > 100.0 * alphas[1], "{alphas:?}");
    assert!(v["distance"].as_f64().unwrap() < 1e-2);
}

#[test]
fn approach_refuses_other_statuses() {
    let r = sdfeas(&["approach", path_str(&fixture("identity.json")), "--eps", "1e-3"]);
    assert_eq!(r.code, 66);
    assert!(r.stderr.contains("refusing"), "{}", r.stderr);
    assert_eq!(sdfeas(&["approach", path_str(&fixture("canonical.json")), "--eps", "0"]).code, 65);
    assert_eq!(sdfeas(&["approach", path_str(&fixture("malformed.json")), "--eps", "1e-3"]).code, 65);
}

#[test]
fn selftest_smallest_sweep() {
    let r = sdfeas(&[
        "selftest", "--n", "2", "--seeds", "1", "--json", "--congruence-trials", "5", "--schur-trials", "50",
        "--gordan-trials", "50", "--fuzz-trials", "10",
    ]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    let v = json_line(&r.stdout);
    let instances: u64 = v["sweep"]["rows"].as_array().unwrap().iter().map(|r| r["instances"].as_u64().unwrap()).sum();
    assert_eq!(instances, 4);
    assert_eq!(v["passed"], Value::Bool(true));
}

fn total_ambiguous(v: &Value) -> u64 {
    let sweep: u64 = v["sweep"]["rows"].as_array().unwrap().iter().map(|r| r["ambiguous"].as_u64().unwrap()).sum();
    let suites: u64 = v["suites"].as_array().unwrap().iter().map(|s| s["ambiguous"].as_u64().unwrap()).sum();
    sweep + suites
}

#[test]
fn a_wide_ambiguity_band_is_reported_not_failed() {
    let base = [
        "selftest", "--n", "4", "--seeds", "3", "--json", "--congruence-trials", "20", "--schur-trials", "20",
        "--gordan-trials", "20", "--fuzz-trials", "10",
    ];
    let default = sdfeas(&base);
    let mut wide_args = base.to_vec();
    wide_args.extend(["--tol-amb", "1e-1"]);
    let wide = sdfeas(&wide_args);
    assert_eq!(default.code, 0);
    assert_eq!(wide.code, 0, "{}", wide.stdout);
    let (a, b) = (total_ambiguous(&json_line(&default.stdout)), total_ambiguous(&json_line(&wide.stdout)));
    assert!(b > a, "default {a}, widened {b}");
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let args = [
        "classify",
        "--json",
        path_str(&fixture("two_direction.json")),
        path_str(&fixture("not_directional.json")),
        path_str(&fixture("canonical.dat-s")),
    ]
    .map(String::from);
    let argv: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    let a = sdfeas(&argv);
    let b = sdfeas(&argv);
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout);
    let inputs: Vec<String> = a.stdout.lines().map(|l| json_line(l)["input"].as_str().unwrap().to_string()).collect();
    assert!(inputs[0].ends_with("two_direction.json") && inputs[2].ends_with("canonical.dat-s"));
}

#[test]
fn batch_writes_one_certificate_per_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("certs");
    let r = sdfeas(&[
        "classify",
        path_str(&fixture("identity.json")),
        path_str(&fixture("canonical.json")),
        "--cert",
        path_str(&out),
    ]);
    assert_eq!(r.code, 0);
    assert!(out.join("identity.cert").exists() && out.join("canonical.cert").exists());
    let r = sdfeas(&["classify", path_str(&fixture("identity.json")), path_str(&fixture("malformed.json"))]);
    assert_eq!(r.code, 65);
    assert!(r.stdout.contains("malformed.json: InputError"));
}

#[test]
fn report_schema_is_stable() {
    let r = sdfeas(&["classify", "--json", path_str(&fixture("canonical.json"))]);
    let v = json_line(&r.stdout);
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    keys.sort();
    assert_eq!(
        keys,
        ["certificate", "chain", "exit_code", "format", "input", "levels", "message", "outcome", "status", "tolerances", "version"]
    );
    assert_eq!(v["format"], "sdfeas-report");
    assert_eq!(v["version"], 1);
    assert_eq!(v["status"], "WeaklyInfeasible");
    assert_eq!(v["exit_code"], 2);
}

#[test]
fn tolerances_are_surfaced_and_validated() {
    let r = sdfeas(&["config", "--tol", "1e-6", "--tol-amb", "1e-5"]);
    assert_eq!(r.code, 0);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["tol_rank"], 1e-6);
    assert_eq!(v["tol_amb"], 1e-5);
    assert_eq!(v["tol_lin"], 1e-8);
    assert_eq!(sdfeas(&["config", "--tol", "-1"]).code, 65);
    assert_eq!(sdfeas(&["classify", "--bogus", "x"]).code, 65);
    assert_eq!(sdfeas(&["--help"]).code, 0);
}
