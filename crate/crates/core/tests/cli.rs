use lplc::cli::{run, EXIT_ASSUMPTION, EXIT_INPUT, EXIT_NOT_ADMISSIBLE, EXIT_OK};
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::Command;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn spec(name: &str) -> String {
    root().join("specs").join(name).display().to_string()
}

fn lplc(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["lplc"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn schema_check(text: &str) -> Value {
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(root().join("schemas/report.schema.json")).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let value: Value = serde_json::from_str(text).unwrap();
    let errors: Vec<String> = validator.iter_errors(&value).map(|e| format!("{e} at {}", e.instance_path())).collect();
    assert!(errors.is_empty(), "{errors:#?}");
    value
}

fn write_tmp(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn classify_pt_cubic() {
    let (code, out, _) = lplc(&["classify", &spec("pt_n1.json")]);
    assert_eq!(code, EXIT_OK);
    let v = schema_check(&out);
    assert_eq!(v["verdict"], "LimitPointI");
    let delta = v["criteria"].as_array().unwrap().iter().find(|c| c["id"] == "delta").unwrap();
    assert_eq!(delta["outcome"], "fired");
    assert!(delta["N"].as_u64().unwrap() <= 2);
}

#[test]
fn schema_rejects_foreign_shapes() {
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(root().join("schemas/report.schema.json")).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let (_, out, _) = lplc(&["geometry", &spec("pt_n1.json")]);
    let mut v: Value = serde_json::from_str(&out).unwrap();
    assert!(validator.is_valid(&v));
    v["lambda_gap"] = Value::from(-1.0);
    assert!(!validator.is_valid(&v));
    assert!(!validator.is_valid(&serde_json::json!({"verdict": "Maybe"})));
}

#[test]
fn classify_is_byte_identical_across_runs() {
    let a = lplc(&["classify", &spec("bounded_f.json")]);
    let b = lplc(&["classify", &spec("bounded_f.json")]);
    assert_eq!(a.0, EXIT_OK);
    assert_eq!(a, b);
    schema_check(&a.1);
}

#[test]
fn classify_limit_circle_reports_route() {
    let (code, out, _) = lplc(&["classify", &spec("quartic_limit_circle.json")]);
    assert_eq!(code, EXIT_OK);
    let v = schema_check(&out);
    assert_eq!(v["verdict"], "LimitCircle");
    assert_eq!(v["route"], "numerical-energy-form");
}

#[test]
fn excluded_angle_exits_two() {
    let (code, out, err) = lplc(&["classify", &spec("pt_n1_excluded_angle.json")]);
    assert_eq!(code, EXIT_NOT_ADMISSIBLE);
    assert!(out.is_empty());
    assert!(err.contains("not admissible"));
    assert_eq!(lplc(&["geometry", &spec("pt_n1_excluded_angle.json")]).0, EXIT_NOT_ADMISSIBLE);
}

#[test]
fn malformed_potential_points_at_offset() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(&dir, "bad.json", r#"{"a": 1.0, "phi": 0.0, "lambda": [0.0, 0.0], "potential": "-x^^2"}"#);
    let (code, _, err) = lplc(&["classify", &p]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("offset 3"), "{err}");
    assert!(err.contains("     ^"), "{err}");
}

#[test]
fn unknown_keys_and_missing_files_exit_four() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(&dir, "extra.json", r#"{"a": 1.0, "phi": 0.0, "lambda": [0.0, 0.0], "potential": "x", "colour": 1}"#);
    assert_eq!(lplc(&["classify", &p]).0, EXIT_INPUT);
    let q = write_tmp(&dir, "cfg.json", r#"{"a": 1.0, "phi": 0.0, "lambda": [0.0, 0.0], "potential": "x", "config": {"rhoo": 2}}"#);
    assert_eq!(lplc(&["classify", &q]).0, EXIT_INPUT);
    assert_eq!(lplc(&["classify", "/nonexistent/spec.json"]).0, EXIT_INPUT);
    assert_eq!(lplc(&["frobnicate"]).0, EXIT_INPUT);
}

#[test]
fn config_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_tmp(&dir, "c.json", r#"{"rho": 0.5}"#);
    assert_eq!(lplc(&["classify", &spec("pt_n1.json"), "--config", &bad]).0, EXIT_INPUT);
    let good = write_tmp(&dir, "d.json", r#"{"N_max": 1, "horizon": 4096}"#);
    let (code, out, _) = lplc(&["classify", &spec("pt_n1.json"), "--config", &good]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(schema_check(&out)["horizon"], 4096.0);
}

#[test]
fn solve_writes_fixed_header_csv() {
    let (code, out, _) = lplc(&["solve", &spec("pt_n1.json"), "--xmax", "20", "--points", "9"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 10);
    assert!(lines[0].starts_with("x,re_y_lead,im_y_lead,re_yhat_lead,im_yhat_lead,re_phase,im_phase,envelope"));
    for l in &lines[1..] {
        let cells: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), 10);
        assert!(cells[1].is_finite() && cells[2].is_finite());
    }
    assert_eq!(lines[1].split(',').next().unwrap(), "1.0000000000000000e0");
}

#[test]
fn solve_rejects_broken_hypotheses() {
    let dir = tempfile::tempdir().unwrap();
    let cut = write_tmp(&dir, "cut.json", r#"{"a": 1.0, "phi": 0.0, "lambda": [0.0, 0.0], "potential": "-x^2"}"#);
    assert_eq!(lplc(&["solve", &cut]).0, EXIT_ASSUMPTION);
    // bounded oscillating f keeps the error budget from converging
    assert_eq!(lplc(&["solve", &spec("bounded_f.json")]).0, EXIT_ASSUMPTION);
}

#[test]
fn oracle_reports_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("traj.csv");
    let (code, out, _) = lplc(&["oracle", &spec("constant.json"), "--xmax", "30", "--dump", dump.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let v = schema_check(&out);
    assert_eq!(v["class"], "one_solution_l2");
    let csv = std::fs::read_to_string(&dump).unwrap();
    assert!(csv.starts_with("solution,x,re_v,im_v,re_dv,im_dv,log_offset\n"));
    for name in ["basis1", "basis2", "recessive"] {
        assert!(csv.lines().filter(|l| l.starts_with(name)).count() >= 512);
    }
}

#[test]
fn geometry_reports_pair_and_hull() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("hull.csv");
    let (code, out, _) = lplc(&["geometry", &spec("quartic_limit_circle.json"), "--dump", dump.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let v = schema_check(&out);
    assert!((v["theta"].as_f64().unwrap() + std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    assert!(std::fs::read_to_string(&dump).unwrap().starts_with("re,im\n"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_lplc");
    let status = Command::new(bin).args(["classify", &spec("pt_n2.json")]).output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_NOT_ADMISSIBLE));
    let ok = Command::new(bin).args(["geometry", &spec("pt_n1.json")]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    schema_check(&String::from_utf8(ok.stdout).unwrap());
}
