use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn whopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_whopt"))
        .args(args)
        .current_dir(root())
        .output()
        .expect("binary runs")
}

fn run_to(args: &[&str], out: &Path) -> (i32, Value, String) {
    let mut all: Vec<&str> = args.to_vec();
    let out_str = out.to_str().unwrap();
    all.extend(["--out", out_str]);
    let o = whopt(&all);
    let report = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    (o.status.code().unwrap(), report, String::from_utf8(o.stdout).unwrap())
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(whopt(&["--help"]).status.code(), Some(0));
    assert_eq!(whopt(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_three() {
    assert_eq!(whopt(&[]).status.code(), Some(3));
    assert_eq!(whopt(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(whopt(&["validate", "problems/missing.json"]).status.code(), Some(3));
    assert_eq!(whopt(&["solve", "problems/ex2.json", "--u=1"]).status.code(), Some(3));
    assert_eq!(whopt(&["solve", "problems/ex2.json", "--u=a,b"]).status.code(), Some(3));
    assert_eq!(whopt(&["parametric", "problems/ex2.json", "--grid", "1,2"]).status.code(), Some(3));
    assert_eq!(whopt(&["kernel", "problems/ex1.json", "--h", "x1 +"]).status.code(), Some(3));
}

#[test]
fn schema_errors_carry_pointers() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(root().join("problems/quartic.json")).unwrap()).unwrap();
    v["constraints"]["pieces"][0]["linear"]["b"] = serde_json::json!([0]);
    std::fs::write(&bad, v.to_string()).unwrap();
    let out = dir.path().join("r.json");
    let (code, r, _) = run_to(&["kernel", bad.to_str().unwrap()], &out);
    assert_eq!(code, 3);
    assert_eq!(r["error"]["kind"], "SchemaError");
    let pointer = r["error"]["pointer"].as_str().unwrap();
    assert!(pointer.starts_with("/constraints/pieces/0/linear"), "{pointer}");

    v["objective"] = serde_json::json!("x1^4 + x9");
    std::fs::write(&bad, v.to_string()).unwrap();
    let (code, r, _) = run_to(&["kernel", bad.to_str().unwrap()], &out);
    assert_eq!(code, 3);
    assert_eq!(r["error"]["pointer"], "/objective");
}

#[test]
fn report_layout_and_verdict_routing() {
    let o = whopt(&["kernel", "problems/ex1.json"]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["report_version"], 1);
    assert_eq!(r["command"], "kernel");
    assert_eq!(r["problem"]["name"], "disk-and-ray");
    assert_eq!(r["config"]["resolution"], 90);
    assert_eq!(r["config"]["seed"], 1);
    assert_eq!(r["verdict"]["status"], "Trivial");
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.starts_with("Trivial:"), "{err}");

    let dir = tempfile::tempdir().unwrap();
    let (_, r, stdout) = run_to(&["kernel", "problems/ex1.json", "--seed", "9", "--resolution", "45"], &dir.path().join("r.json"));
    assert!(stdout.starts_with("Trivial:"));
    assert_eq!(r["config"]["seed"], 9);
    assert_eq!(r["config"]["resolution"], 45);
}

#[test]
fn reports_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["validate", "problems/ex2.json"][..],
        &["parametric", "problems/quartic.json", "--grid", "0,4;-1,4"][..],
    ] {
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        run_to(args, &a);
        run_to(args, &b);
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{args:?}");
    }
}

#[test]
fn asymptotic_override_reveals_a_larger_zero_set() {
    let dir = tempfile::tempdir().unwrap();
    let (code, r, _) = run_to(
        &["kernel", "problems/ex1.json", "--alpha-override", "2", "--h", "x1*x2"],
        &dir.path().join("r.json"),
    );
    assert_eq!(code, 0);
    let k = &r["result"]["kernel"];
    assert_eq!(k["classification"], "Nontrivial");
    assert_eq!(k["rays"], serde_json::json!([[1.0, 0.0]]));
}

#[test]
fn escaping_and_shifted_solves() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let (code, r, _) = run_to(&["solve", "problems/ex2.json", "--u=-1,0"], &out);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["outcome"]["status"], "Converged");
    assert_eq!(r["result"]["minty"]["status"], "checked");
    let (code, r, _) = run_to(&["solve", "problems/escaping.json"], &out);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["outcome"]["status"], "Escaping");
}

#[test]
fn sweep_csv_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let (code, r, _) = run_to(
        &["parametric", "problems/quartic.json", "--grid", "0,4;4", "--csv", csv.to_str().unwrap()],
        &dir.path().join("r.json"),
    );
    assert_eq!(code, 0);
    assert_eq!(r["result"]["records"].as_array().unwrap().len(), 2);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "u1,u2,label,status,kernel_margin,norm,value");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("4,4,certified,Converged,"));
}

#[test]
fn wrong_cone_declaration_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let (code, r, stdout) = run_to(&["validate", "problems/ex1_wrong_cone.json"], &dir.path().join("r.json"));
    assert_eq!(code, 2);
    assert_eq!(r["verdict"]["pass"], false);
    assert!(stdout.contains("asymptotic_cone"));
}
