use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_treeshift"))
}

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "testdata", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn fork_is_cs_with_certificate() {
    let o = run(&["check", &fixture("uneven_fork.json"), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["verdict"], "cs");
    let doc: treeshift::ConjugationDocument = serde_json::from_value(v["certificate"].clone()).unwrap();
    let c = treeshift::Conjugation::from_document(&doc, 1e-10).unwrap();
    let t = treeshift::DirectedTree::from_document(&serde_json::from_str(&std::fs::read_to_string(fixture("uneven_fork.json")).unwrap()).unwrap()).unwrap();
    let mut w = treeshift::WeightAssignment::new();
    for (v, z) in [("1,1", 1.0), ("2,1", 1.0), ("2,2", 2f64.sqrt())] {
        w.insert(treeshift::VertexId::new(v), num_complex::Complex64::new(z, 0.0));
    }
    let s = treeshift::build_shift(&t, &w).unwrap();
    assert!(treeshift::verify_c_symmetry(s.matrix(), &c, 1e-10).unwrap().pass);
}

#[test]
fn fork_with_trunk_is_not_cs() {
    let o = run(&["check", &fixture("uneven_fork_with_trunk.json"), "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    assert_eq!(v["verdict"], "not_cs");
    // Kernel dimensions of T^m and T*^m always coincide, so the witness is a word trace.
    assert_eq!(v["obstruction"]["kind"], "word_trace");
}

#[test]
fn kernel_table_matches_structural_count() {
    let o = run(&["kernels", &fixture("uneven_fork_with_trunk.json"), "--max-power", "3", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = json(&o)["rows"].as_array().unwrap().clone();
    // dim ker S^m counts vertices with no descendant at distance m.
    let expected = [(1, 2), (2, 3), (3, 4)];
    for (row, (m, k)) in rows.iter().zip(expected) {
        assert_eq!(row["power"], m);
        assert_eq!(row["ker"], k);
        assert_eq!(row["ker_adjoint"], k);
    }
}

#[test]
fn missing_weight_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("doc.json");
    std::fs::write(
        &path,
        r#"{"vertices":["0","1","2"],"root":"0","edges":[["0","1"],["1","2"]],"weights":{"1":[1,0]}}"#,
    )
    .unwrap();
    let o = run(&["check", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`2`"));
}

#[test]
fn malformed_document_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("doc.json");
    std::fs::write(&path, r#"{"vertices":["0"],"edges":[],"weights":{}}"#).unwrap();
    let o = run(&["check", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("root"));
}

#[test]
fn separate_weights_document() {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("tree.json");
    let weights = dir.path().join("w.json");
    std::fs::write(&tree, r#"{"vertices":["0","1","2"],"root":"0","edges":[["0","1"],["1","2"]]}"#).unwrap();
    std::fs::write(&weights, r#"{"weights":{"1":[1,0],"2":[2,0]}}"#).unwrap();
    let o = run(&["check", tree.to_str().unwrap(), "--weights", weights.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["obstruction"]["kind"], "word_trace");
}

#[test]
fn classify_binary_reports_first_failing_index() {
    let o = run(&["classify", "--family", "binary", "--kappa", "2", "--weights", "1,2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("not satisfied (l=1)"));
}

#[test]
fn classify_two_branch_json() {
    let o = run(&["classify", "--family", "two-branch", "--kappa", "1", "--theta", "2", "--weights", "1,1,1", "--json"]);
    let v = json(&o);
    assert_eq!(v["family"], "two_branch");
    assert_eq!(v["clause_ii"], true);
    assert_eq!(v["satisfied"], true);
}

#[test]
fn conjugate_two_branch_and_failure() {
    let o = run(&["conjugate", "--family", "two-branch", "--kappa", "1", "--theta", "2", "--weights", "1,1,1", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(json(&o)["intertwining_residual"].as_f64().unwrap() <= 1e-10);
    let o = run(&["conjugate", "--family", "two-branch", "--kappa", "1", "--theta", "2", "--weights", "1,1,3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn generate_round_trips_through_check() {
    let o = run(&["generate", "--family", "two-branch", "--kappa", "1", "--theta", "2"]);
    let v = json(&o);
    assert_eq!(v["vertices"].as_array().unwrap().len(), 6);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    std::fs::write(&path, &o.stdout).unwrap();
    let c = run(&["check", path.to_str().unwrap()]);
    assert_eq!(c.status.code(), Some(0));
    assert!(stdout(&c).starts_with("verdict: cs"));
}

#[test]
fn broom_reports() {
    let o = run(&["broom", "--weights", "0.1,0.01,0.001,0.0001", "--teeth", "12", "--tol", "1e-8", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["pass"], true);
    assert_eq!(v["intertwining"].as_array().unwrap().len(), 5);
    let o = run(&["broom", "--weights", "0.9,0.9,0.9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("step 2"));
}

#[test]
fn crossval_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = run(&[
            "crossval", "--family", "two-branch", "--kappa-max", "1", "--theta-max", "2", "--theta-offset", "1",
            "--samples", "4", "--seed", "5", "--out", p.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(x, y);
    let v: Value = serde_json::from_slice(&x).unwrap();
    assert_eq!(v["summary"]["instances"], 8);
    assert_eq!(v["summary"]["agree"], 8);
}

#[test]
fn dump_matrix_writes_basis_and_entries() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.json");
    let o = run(&["check", &fixture("uneven_fork.json"), "--dump-matrix", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["basis"].as_array().unwrap().len(), 4);
}

#[test]
fn invalid_flags_are_input_errors() {
    let f = fixture("uneven_fork.json");
    for bad in [["--tol", "0"], ["--restarts", "0"], ["--word-len", "1"]] {
        let o = run(&["check", &f, bad[0], bad[1]]);
        assert_eq!(o.status.code(), Some(3), "{bad:?}");
    }
}
