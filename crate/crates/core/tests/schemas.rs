use std::path::{Path, PathBuf};

use hierarchy_lab::cli::run;
use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn load(path: PathBuf) -> Value {
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap()
}

fn assert_valid(schema: &str, instance: &Value) {
    let schema = load(root().join("docs/schemas").join(format!("{schema}.schema.json")));
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

fn json_output(args: &[&str]) -> Value {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("hierarchy-lab").chain(args.iter().copied()), &mut out, &mut err);
    assert!(code == 0 || code == 4, "exit {code}: {}", String::from_utf8_lossy(&err));
    serde_json::from_slice(&out).unwrap()
}

fn data(name: &str) -> String {
    root().join("crates/core/data").join(name).display().to_string()
}

#[test]
fn bundled_files_match_schemas() {
    assert_valid("problem", &load(data("counterexample.json").into()));
    assert_valid("certificate", &load(data("lasserre_certificate.json").into()));
    assert_valid("certificate", &load(data("sdsos_certificate.json").into()));
}

#[test]
fn solve_output_matches_schema() {
    let p = data("counterexample.json");
    assert_valid("solve-report", &json_output(&["solve", &p, "--kind", "lasserre", "--order", "1", "--json"]));
    assert_valid("solve-report", &json_output(&["solve", &p, "--kind", "dsos", "--order", "2", "--json"]));
    let failed = json_output(&["solve", &p, "--kind", "sdsos", "--order", "2", "--max-iters", "1", "--json"]);
    assert_valid("solve-report", &failed);
}

#[test]
fn verify_output_matches_schema() {
    let p = data("counterexample.json");
    for cert in ["lasserre_certificate.json", "sdsos_certificate.json"] {
        assert_valid("verify-report", &json_output(&["verify", &data(cert), &p, "--json"]));
    }
}

#[test]
fn reproduce_output_matches_schema() {
    assert_valid("reproduce-report", &json_output(&["reproduce", "--orders", "1,2", "--json"]));
}

#[test]
fn schemas_reject_malformed_documents() {
    let mut problem = load(data("counterexample.json").into());
    problem["objective"][0]["coefficient"] = Value::from(0.5);
    let schema = load(root().join("docs/schemas/problem.schema.json"));
    assert!(!jsonschema::is_valid(&schema, &problem));
    let mut cert = load(data("sdsos_certificate.json").into());
    cert["multipliers"][0]["cone"] = Value::from("PSD");
    let schema = load(root().join("docs/schemas/certificate.schema.json"));
    assert!(!jsonschema::is_valid(&schema, &cert));
}
