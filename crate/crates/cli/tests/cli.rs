use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn griffiths(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_griffiths")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn sphere(n: usize, sites: usize, powers: &str) -> String {
    format!(r#"{{"mode":"sphere","n":{n},"N":{sites},"terms":[{{"coeff":"1","powers":[{powers}]}}]}}"#)
}

fn gaussian(sites: usize, powers: &str) -> String {
    format!(r#"{{"mode":"gaussian","n":1,"N":{sites},"terms":[{{"coeff":"1","powers":[{powers}]}}]}}"#)
}

const PATH_F: &str = r#"{"N":2,"entries":[["2","-1"],["-1","2"]]}"#;

#[test]
fn moment_prints_exact_and_decimal() {
    let dir = TempDir::new().unwrap();
    write(&dir, "u12sq.json", &sphere(2, 2, r#"{"i":1,"j":2,"p":2}"#));
    let o = griffiths(dir.path(), &["moment", "--input", "u12sq.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "1/2 (0.500000000000000)");
}

#[test]
fn diagonal_sphere_pair_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    write(&dir, "bad.json", &sphere(2, 2, r#"{"i":1,"j":1,"p":2}"#));
    let o = griffiths(dir.path(), &["moment", "--input", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("input error"));
}

#[test]
fn missing_file_and_bad_usage_exit_2() {
    let dir = TempDir::new().unwrap();
    assert_eq!(griffiths(dir.path(), &["moment", "--input", "nope.json"]).status.code(), Some(2));
    assert_eq!(griffiths(dir.path(), &["moment"]).status.code(), Some(2));
    assert_eq!(griffiths(dir.path(), &["suite", "nightly"]).status.code(), Some(2));
}

#[test]
fn griffiths_on_cone_inputs_holds() {
    let dir = TempDir::new().unwrap();
    write(&dir, "f.json", &sphere(3, 3, r#"{"i":1,"j":2,"p":1},{"i":2,"j":3,"p":1}"#));
    write(&dir, "g.json", &sphere(3, 3, r#"{"i":1,"j":3,"p":1}"#));
    let o = griffiths(dir.path(), &["griffiths", "--f", "f.json", "--g", "g.json", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "holds");
    assert_eq!(v["gap"], "1/9");
    assert!(!dir.path().join("counterexample.json").exists());
}

#[test]
fn evolve_and_dirichlet() {
    let dir = TempDir::new().unwrap();
    write(&dir, "u12.json", &sphere(2, 2, r#"{"i":1,"j":2,"p":1}"#));
    let o = griffiths(dir.path(), &["evolve", "--input", "u12.json", "--t", "0.5", "--check-cone", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["cone_warnings"].as_array().unwrap().is_empty());
    let o = griffiths(dir.path(), &["dirichlet", "--f", "u12.json", "--h", "u12.json"]);
    assert_eq!(stdout(&o).trim(), "1 (1.00000000000000)");
}

#[test]
fn flow_csv_is_monotone() {
    let dir = TempDir::new().unwrap();
    write(&dir, "f.json", &sphere(2, 2, r#"{"i":1,"j":2,"p":2}"#));
    let o = griffiths(dir.path(), &["flow", "--f", "f.json", "--g", "f.json", "--t-grid", "0:0.5:2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("t,h,monotone_ok"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[0].starts_with("0,3.75"));
    assert!(rows.iter().all(|r| r.ends_with(",true")));
}

#[test]
fn chernoff_and_normalization_tables() {
    let dir = TempDir::new().unwrap();
    let o = griffiths(dir.path(), &["chernoff", "--n", "3", "--l", "2", "--t", "1.0", "--m", "8,16,32"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let errs: Vec<f64> = out.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(errs.len(), 3);
    assert!(errs[0] > errs[1] && errs[1] > errs[2]);
    let o = griffiths(dir.path(), &["normalization", "--n", "2", "--t-grid", "1e-1,1e-2"]);
    assert!(stdout(&o).starts_with("t,c,ratio_minus_one\n0.1,"));
}

#[test]
fn gaussian_subcommands() {
    let dir = TempDir::new().unwrap();
    write(&dir, "F.json", PATH_F);
    write(&dir, "bad.json", r#"{"N":2,"entries":[["1","2"],["2","1"]]}"#);
    write(&dir, "x12.json", &gaussian(2, r#"{"i":1,"j":2,"p":1}"#));
    write(&dir, "x12sq.json", &gaussian(2, r#"{"i":1,"j":2,"p":2}"#));
    let o = griffiths(dir.path(), &["gaussian", "moment", "--F", "F.json", "--input", "x12sq.json"]);
    assert_eq!(stdout(&o).trim(), "2/3 (0.666666666666667)");
    let o = griffiths(
        dir.path(),
        &["gaussian", "griffiths", "--F", "F.json", "--f", "x12.json", "--g", "x12.json", "--format", "json"],
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["gap"], "5/9");
    let o = griffiths(dir.path(), &["gaussian", "moment", "--F", "bad.json", "--input", "x12.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = griffiths(dir.path(), &["gaussian", "trotter", "--F", "F.json", "--input", "x12.json", "--m", "4,8,16"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn mc_reports_exact_and_sigmas() {
    let dir = TempDir::new().unwrap();
    write(&dir, "u12sq.json", &sphere(3, 2, r#"{"i":1,"j":2,"p":2}"#));
    let args = ["mc", "--input", "u12sq.json", "--samples", "20000", "--seed", "42"];
    let a = griffiths(dir.path(), &args);
    assert_eq!(a.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(&keys[..4], ["mean", "stderr", "exact", "sigmas"]);
    assert!((v["exact"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert!(v["sigmas"].as_f64().unwrap() < 5.0);
    assert_eq!(stdout(&a), stdout(&griffiths(dir.path(), &args)));
}

#[test]
fn sphere_couplings_with_gaussian_matrix_is_rejected() {
    let dir = TempDir::new().unwrap();
    write(&dir, "u12.json", &sphere(2, 2, r#"{"i":1,"j":2,"p":1}"#));
    write(&dir, "F.json", PATH_F);
    let o = griffiths(dir.path(), &["mc", "--input", "u12.json", "--F", "F.json", "--samples", "1000"]);
    assert_eq!(o.status.code(), Some(2));
}
