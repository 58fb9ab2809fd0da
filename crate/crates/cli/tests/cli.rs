use std::path::Path;
use std::process::{Command, Output};

use mr3mix::harness::{read_matrix, read_pairs, Family};
use mr3mix::verify::analytic_spectrum;

fn mr3mix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mr3mix"))
        .args(args)
        .output()
        .expect("failed to launch mr3mix")
}

fn ok(args: &[&str]) -> String {
    let out = mr3mix(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    mr3mix(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_solve_verify_double_quad() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("kac.txt");
    let p = dir.path().join("pairs.txt");
    ok(&["gen", "--family", "clement", "--n", "9", "--out", s(&m)]);
    let t = read_matrix::<f64>(std::fs::File::open(&m).unwrap()).unwrap();
    assert_eq!(t.n(), 9);
    assert_eq!(t.offdiag()[0], 8f64.sqrt());

    let report = ok(&["solve", "--in", s(&m), "--mode", "double-quad", "--out", s(&p)]);
    assert!(report.contains("pairs 9"), "{report}");
    let (n, pairs) = read_pairs::<f64>(std::fs::File::open(&p).unwrap()).unwrap();
    assert_eq!((n, pairs.len()), (9, 9));
    let exact = analytic_spectrum::<f64>(Family::Clement, 9).unwrap();
    for (pr, l) in pairs.iter().zip(&exact) {
        assert!((pr.lambda - l).abs() <= 1e-13, "{} vs {l}", pr.lambda);
    }

    let v = ok(&["verify", "--in", s(&m), "--pairs", s(&p)]);
    assert!(v.starts_with("n 9 pairs 9"), "{v}");
}

#[test]
fn single_double_subset() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("w.txt");
    let p = dir.path().join("pairs.txt");
    ok(&["gen", "--family", "wilkinson", "--n", "20", "--mode", "single-double", "--out", s(&m)]);
    let t = read_matrix::<f32>(std::fs::File::open(&m).unwrap()).unwrap();
    assert_eq!(t.n(), 21);
    ok(&[
        "solve", "--in", s(&m), "--mode", "single-double", "--subset", "3:7", "--threads", "2", "--out", s(&p),
    ]);
    let (_, pairs) = read_pairs::<f32>(std::fs::File::open(&p).unwrap()).unwrap();
    let idx: Vec<usize> = pairs.iter().map(|p| p.index).collect();
    assert_eq!(idx, vec![2, 3, 4, 5, 6]);
    let v = ok(&["verify", "--in", s(&m), "--pairs", s(&p), "--mode", "single-double"]);
    assert!(v.contains("pairs 5"), "{v}");
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.txt");
    ok(&["gen", "--family", "121", "--n", "6", "--out", s(&m)]);
    assert_eq!(code(&["solve", "--in", s(&m), "--mode", "double-quad", "--gaptol", "0.1"]), 2);
    assert_eq!(code(&["solve", "--in", s(&m), "--mode", "double-quad", "--subset", "2:7"]), 2);
    assert_eq!(code(&["solve", "--in", s(&m), "--mode", "double-quad", "--subset", "0:3"]), 2);
    assert_eq!(code(&["solve", "--in", s(&m), "--mode", "quad"]), 2);
    assert_eq!(code(&["solve", "--in", s(&m), "--mode", "double-quad", "--threads", "0"]), 2);
    assert_eq!(code(&["gen", "--family", "lehmer", "--n", "6", "--out", s(&m)]), 2);
    assert_eq!(code(&["gen", "--family", "uniform", "--n", "0", "--out", s(&m)]), 2);
}

#[test]
fn io_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.txt");
    assert_eq!(code(&["solve", "--in", s(&missing), "--mode", "double-quad"]), 1);

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "3\n1 2\n1 1\n").unwrap();
    assert_eq!(code(&["solve", "--in", s(&bad), "--mode", "double-quad"]), 1);

    let m = dir.path().join("m.txt");
    ok(&["gen", "--family", "121", "--n", "4", "--out", s(&m)]);
    let p = dir.path().join("p.txt");
    std::fs::write(&p, "5 1\n1 0x1p0 1 0 0 0 0\n").unwrap();
    assert_eq!(code(&["verify", "--in", s(&m), "--pairs", s(&p)]), 1);
    assert_eq!(code(&["verify", "--in", s(&m), "--pairs", s(&missing)]), 1);
}

#[test]
fn decimal_matrix_input() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.txt");
    std::fs::write(&m, "3\n2 2 2\n1 1\n").unwrap();
    let out = ok(&["solve", "--in", s(&m), "--mode", "double-quad"]);
    assert!(out.contains("n 3 pairs 3"), "{out}");
}
