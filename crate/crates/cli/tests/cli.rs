use std::path::Path;
use std::process::{Command, Output};

fn fracfem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracfem")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn deterministic_runs_write_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = fracfem(&["disk-convergence", "--level", "1", "--deterministic", "--out", path(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let first = std::fs::read(a.join("disk-convergence.csv")).unwrap();
    assert_eq!(first, std::fs::read(b.join("disk-convergence.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("level,h,n_dofs,quad_n,error_l2,error_linf,time_b,time_k,time_m,time_solve,cg_iterations\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn mesh_gen_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracfem(&["mesh-gen", "--level", "1", "--out", path(dir.path())]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("mesh-1.json")).unwrap()).unwrap();
    assert_eq!(doc["n_free"], 37);
    assert_eq!(doc["triangles"].as_array().unwrap().len(), doc["interior"].as_array().unwrap().len());
}

#[test]
fn bump_reports_both_signs() {
    let o = fracfem(&["bump", "--level", "2"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# bump-eta+0.2") && text.contains("# bump-eta-0.2"));
    assert!(text.contains("center value"));
}

#[test]
fn verify_fails_with_low_interpolation_degree() {
    let o = fracfem(&["verify", "--degree-p", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("farfield-h2-vs-dense") && l.ends_with("FAIL")));
}

#[test]
fn invalid_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"levelz": [1]}"#).unwrap();
    assert_eq!(fracfem(&["disk-convergence", "--config", path(&cfg)]).status.code(), Some(2));
    assert_eq!(fracfem(&["disk-convergence", "--level", "1", "--min-level", "3"]).status.code(), Some(2));
    assert_eq!(fracfem(&["disk-convergence", "--level", "1", "--s-bar", "1.5"]).status.code(), Some(2));
}
