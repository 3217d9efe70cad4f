use std::path::{Path, PathBuf};
use std::process::Command;

use hierarchy_lab::cli::{read_native, run, write_native};
use hierarchy_lab::relaxations::{build, HierarchyKind};
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn problem_path() -> String {
    data("counterexample.json").display().to_string()
}

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("hierarchy-lab").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Block structure line of an SDPA sparse file.
fn block_struct(sdpa: &str) -> Vec<i64> {
    let mut lines = sdpa.lines().filter(|l| !l.starts_with('*') && !l.starts_with('"'));
    lines.next();
    lines.next();
    lines.next().unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect()
}

#[test]
fn sdpa_block_structures() {
    let p = problem_path();
    for (kind, order, r, expected) in [
        ("lasserre", "1", "0", vec![3, 1]),
        ("lasserre", "2", "0", vec![6, 3]),
        ("sdsos", "1", "0", vec![2, 2, 2, -1]),
        ("dsos", "1", "0", vec![-10]),
    ] {
        let (code, out, err) = invoke(&["relax", &p, "--kind", kind, "--order", order, "--r", r]);
        assert_eq!(code, 0, "{err}");
        assert_eq!(block_struct(&out), expected, "{kind} d={order}");
    }
}

#[test]
fn sdpa_header_counts_moments() {
    let (code, out, _) = invoke(&["relax", &problem_path(), "--kind", "lasserre", "--order", "1"]);
    assert_eq!(code, 0);
    let m: usize = out.lines().find(|l| !l.starts_with('*')).unwrap().trim().parse().unwrap();
    assert_eq!(m, 5);
}

#[test]
fn native_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("program.json");
    let f = file.display().to_string();
    let (code, _, err) =
        invoke(&["relax", &problem_path(), "--kind", "sdsos", "--order", "2", "--export", "native", "-o", &f]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&file).unwrap();
    let cp = read_native(&text).unwrap();
    assert_eq!(write_native(&cp), text);
    let direct = build(&hierarchy_lab::counterexample::problem(), HierarchyKind::SDSOS, 2).unwrap();
    assert_eq!(write_native(&direct), text);

    let (code, out, err) = invoke(&["solve", &f, "--json"]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    let bound = v["bound"].as_f64().unwrap();
    assert!((bound - 4.0 * (1.0 - 2f64.sqrt())).abs() < 1e-6, "{bound}");
}

#[test]
fn solve_reports_minimizer_and_multiplier() {
    let (code, out, err) = invoke(&["solve", &problem_path(), "--kind", "lasserre", "--order", "1", "--json"]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["status"], "OPTIMAL");
    for x in v["minimizer"].as_array().unwrap() {
        assert!((x.as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-6);
    }
    let m = v["multipliers"][0].as_f64().unwrap();
    assert!((m - 2.0 * (2f64.sqrt() - 1.0)).abs() < 1e-6, "{m}");
}

#[test]
fn sdsos_solve_has_no_minimizer() {
    let p = problem_path();
    let (code, out, _) = invoke(&["solve", &p, "--kind", "sdsos", "--order", "2", "--json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["bound"].as_f64().unwrap() - 4.0 * (1.0 - 2f64.sqrt())).abs() < 1e-6);
    assert!(v["minimizer"].is_null());

    let (code, out, _) = invoke(&["solve", &p, "--kind", "sdsos", "--order", "2", "--r", "1", "--json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["bound"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn sdpa_header_records_pairs() {
    let (_, out, _) = invoke(&["relax", &problem_path(), "--kind", "sdsos", "--order", "1"]);
    assert!(out.contains("* block 3 soc2x2 moment rows (1,0) (0,1)"), "{out}");
    assert!(out.contains("nonneg localizing[1] (0,0)"), "{out}");
}

#[test]
fn exit_code_for_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"variables\": [\"x\"], \"objective\": [{\"exponents\": [1], \"coefficient\": 0.5}], \"constraints\": []}").unwrap();
    let (code, _, err) = invoke(&["solve", bad.to_str().unwrap(), "--kind", "lasserre", "--order", "1"]);
    assert_eq!(code, 2);
    assert!(err.contains("floating-point"), "{err}");

    let (code, _, _) = invoke(&["solve", "/nonexistent/problem.json", "--kind", "lasserre", "--order", "1"]);
    assert_eq!(code, 2);
    let (code, _, _) = invoke(&["relax", &problem_path(), "--kind", "cubic", "--order", "1"]);
    assert_eq!(code, 2);
}

#[test]
fn exit_code_for_small_order() {
    let (code, _, err) = invoke(&["relax", &problem_path(), "--kind", "lasserre", "--order", "0"]);
    assert_eq!(code, 3, "{err}");
    let (code, _, _) = invoke(&["solve", &problem_path(), "--kind", "sdsos", "--order", "1", "--r", "1"]);
    assert_eq!(code, 3);
}

#[test]
fn exit_code_for_solver_failure() {
    let (code, out, _) =
        invoke(&["solve", &problem_path(), "--kind", "lasserre", "--order", "2", "--max-iters", "2", "--json"]);
    assert_eq!(code, 4);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_ne!(v["status"], "OPTIMAL");
}

#[test]
fn verify_bundled_certificates() {
    for cert in ["lasserre_certificate.json", "sdsos_certificate.json"] {
        let (code, out, err) = invoke(&["verify", data(cert).to_str().unwrap(), &problem_path()]);
        assert_eq!(code, 0, "{cert}: {err}");
        assert!(out.contains("EXACT"), "{out}");
    }
    let (_, out, _) = invoke(&["verify", data("sdsos_certificate.json").to_str().unwrap(), &problem_path()]);
    assert!(out.contains("sigma0: SDSOS"), "{out}");
    let (_, out, _) = invoke(&["verify", data("lasserre_certificate.json").to_str().unwrap(), &problem_path()]);
    assert!(out.contains("sigma0: SOS"), "{out}");
}

#[test]
fn verify_rejects_wrong_lambda() {
    let text = std::fs::read_to_string(data("lasserre_certificate.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["lambda"] = serde_json::json!({"coefficient": "2/5"});
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.json");
    std::fs::write(&cert, v.to_string()).unwrap();
    let (code, out, _) = invoke(&["verify", cert.to_str().unwrap(), &problem_path(), "--json"]);
    assert_eq!(code, 1);
    let report: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["exact"], false);
    assert_ne!(report["residual"], "0");
}

#[test]
fn verify_rejects_understated_cone() {
    let text = std::fs::read_to_string(data("lasserre_certificate.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["multipliers"][0]["cone"] = Value::from("DSOS");
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.json");
    std::fs::write(&cert, v.to_string()).unwrap();
    let (code, out, _) = invoke(&["verify", cert.to_str().unwrap(), &problem_path()]);
    assert_eq!(code, 1);
    assert!(out.contains("EXACT") && out.contains("declared DSOS"), "{out}");
}

#[test]
fn reproduce_single_order() {
    let (code, out, err) = invoke(&["reproduce", "--orders", "1", "--json"]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["orders"], serde_json::json!([1]));
    assert_eq!(v["passed"], true);
    assert_eq!(v["loose_tolerance"], false);
    let cells = v["cells"].as_array().unwrap();
    assert!(cells.iter().all(|c| c["order"] == 1));

    let (_, text, _) = invoke(&["reproduce", "--orders", "1"]);
    let rows: Vec<&str> = text.lines().filter(|l| l.starts_with("1 ")).collect();
    assert_eq!(rows.len(), 1, "{text}");
}

#[test]
fn reproduce_flags_loose_tolerance() {
    let (code, out, _) = invoke(&["reproduce", "--orders", "1", "--tol", "0.1"]);
    assert_eq!(code, 0);
    assert!(out.contains("looser"), "{out}");
    let (code, _, _) = invoke(&["reproduce", "--orders", "0"]);
    assert_eq!(code, 2);
}

#[test]
fn binary_honors_tolerance_env() {
    let bin = env!("CARGO_BIN_EXE_hierarchy-lab");
    let p = problem_path();
    let args = ["solve", p.as_str(), "--kind", "lasserre", "--order", "2", "--json"];
    let iterations = |tol: &str| {
        let out = Command::new(bin).args(args).env("HIERARCHY_LAB_TOL", tol).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        v["iterations"].as_u64().unwrap()
    };
    assert!(iterations("1e-2") < iterations("1e-10"));

    let out = Command::new(bin).args(["verify", "--help"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = Command::new(bin).arg("bogus").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
