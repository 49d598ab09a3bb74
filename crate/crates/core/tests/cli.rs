//! The `gpjit` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

use gpjit::SAMPLE_PROGRAM;

fn gpjit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpjit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_sample_on_every_engine() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "sample.toy", SAMPLE_PROGRAM);
    for args in [
        vec!["run", &f],
        vec!["run", &f, "--engine", "int"],
        vec!["run", &f, "--engine", "int", "--opt"],
        vec!["run", &f, "--engine", "jit"],
        vec!["run", &f, "--engine", "jit", "--opt"],
    ] {
        let o = gpjit(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        assert_eq!(stdout(&o), "int:383\n");
        assert!(o.stderr.is_empty());
    }
}

#[test]
fn run_gp_main_with_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "g.toy",
        "double gp_main(double x0) { return x0 * x0 + sqrt_d(x0) }\n",
    );
    let o = gpjit(&["run", &f, "--engine", "jit", "--math", "--input", "4"]);
    assert_eq!(stdout(&o), "double:18.0\n");
}

#[test]
fn parse_error_reports_position_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "broken.toy", "int x =");
    let o = gpjit(&["run", &f]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("broken.toy:1:8"), "{err}");
}

#[test]
fn type_error_exits_2_and_runtime_error_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "t.toy", "int x = 1.5\nreturn x");
    assert_eq!(gpjit(&["run", &bad]).status.code(), Some(2));
    let deep = write(dir.path(), "r.toy", "int f(int n) { return f(n) }\nreturn f(1)");
    let o = gpjit(&["run", &deep, "--engine", "jit"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("recursion limit"));
    assert_eq!(
        gpjit(&["run", &deep, "--engine", "direct", "--opt"]).status.code(),
        Some(2)
    );
}

#[test]
fn bench_writes_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "sample.toy", SAMPLE_PROGRAM);
    let csv = dir.path().join("out.csv");
    let o = gpjit(&[
        "bench",
        &f,
        "--avg",
        "2",
        "--outer",
        "1",
        "--inner",
        "1,10",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 1 + 5 * 2);
    assert!(rows[0].starts_with("config,outer,inner,mean_ms"));
    let table = stdout(&o);
    for name in ["ALG", "INT", "INT-OPT", "JIT", "JIT-OPT"] {
        assert!(table.lines().any(|l| l.starts_with(name)), "{table}");
    }
}

#[test]
fn artifacts_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "sample.toy", SAMPLE_PROGRAM);
    let data = write(dir.path(), "d.csv", "x0,y\n-1,0\n0,0\n1,2\n2,6\n0.5,0.75\n");
    let runs: [&[&str]; 4] = [
        &["dump-ir", &f, "--opt"],
        &["dot", &f],
        &["run", &f, "--engine", "int"],
        &[
            "evolve",
            "--dataset",
            &data,
            "--seed",
            "3",
            "--pop",
            "12",
            "--gens",
            "3",
            "--engine",
            "int",
            "--opt",
        ],
    ];
    for args in runs {
        let a = gpjit(args);
        let b = gpjit(args);
        assert_eq!(
            a.status.code(),
            Some(0),
            "{args:?}: {}",
            String::from_utf8_lossy(&a.stderr)
        );
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let ir = stdout(&gpjit(&["dump-ir", &f, "--opt"]));
    assert!(ir.contains("@compute(i64 168, i64 11)"));
    assert!(stdout(&gpjit(&["dot", &f])).starts_with("digraph"));
}

#[test]
fn evolve_prints_a_program_and_its_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", "x0,y\n-1,0\n0,0\n1,2\n2,6\n");
    let o = gpjit(&[
        "evolve",
        "--dataset",
        &data,
        "--pop",
        "8",
        "--gens",
        "2",
        "--engine",
        "jit",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("double gp_main(double x0) {"), "{text}");
    let sse: f64 = text
        .lines()
        .last()
        .unwrap()
        .strip_prefix("sse:")
        .unwrap()
        .parse()
        .unwrap();
    assert!(sse >= 0.0);
    let source: String = text
        .lines()
        .filter(|l| !l.starts_with("sse:"))
        .collect::<Vec<_>>()
        .join("\n");
    gpjit::type_check(gpjit::parse_source(&source).unwrap()).unwrap();
}

#[test]
fn ragged_dataset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", "x0,y\n1,2\n3\n");
    let o = gpjit(&["evolve", "--dataset", &data]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
}

#[test]
fn output_flag_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "sample.toy", SAMPLE_PROGRAM);
    let target = dir.path().join("ast.dot");
    let o = gpjit(&["dot", &f, "-o", target.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(target).unwrap().starts_with("digraph"));
}
