use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lpbox(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpbox"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_two_variable_fixture(dir: &Path) {
    fs::create_dir_all(dir).unwrap();
    fs::write(dir.join("manifest"), "n = 2\n").unwrap();
    fs::write(
        dir.join("A.mtx"),
        "%%MatrixMarket matrix coordinate real general\n2 2 0\n",
    )
    .unwrap();
    fs::write(dir.join("b.txt"), "-1\n1\n").unwrap();
}

#[test]
fn solves_the_two_variable_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    write_two_variable_fixture(tmp.path());
    let out = lpbox(&["solve-bqp", path(tmp.path())]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = stdout_json(&out);
    assert_eq!(r["objective"], -1.0);
    assert_eq!(r["x"], serde_json::json!([1, 0]));
    assert_eq!(r["status"], "converged");
    assert!(r["binariness"].as_f64().unwrap() <= 1e-3);
    assert!(r["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn infeasible_oracle_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    write_two_variable_fixture(tmp.path());
    fs::write(tmp.path().join("manifest"), "n = 2\nm1 = 1\n").unwrap();
    fs::write(
        tmp.path().join("C1.mtx"),
        "%%MatrixMarket matrix coordinate real general\n1 2 2\n1 1 1\n1 2 1\n",
    )
    .unwrap();
    fs::write(tmp.path().join("d1.txt"), "3\n").unwrap();
    let out = lpbox(&["oracle", "bqp", path(tmp.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty feasible set"));
}

#[test]
fn oracle_reports_the_fixture_optimum() {
    let tmp = tempfile::tempdir().unwrap();
    write_two_variable_fixture(tmp.path());
    let out = lpbox(&["oracle", "bqp", path(tmp.path())]);
    assert!(out.status.success());
    let r = stdout_json(&out);
    assert_eq!(r["best_objective"], -1.0);
    assert_eq!(r["n_feasible"], 4);
}

#[test]
fn bench_is_byte_identical_for_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &str| {
        let d = tmp.path().join(dir);
        let out = lpbox(&[
            "bench",
            "--seed",
            "7",
            "--instances",
            "4",
            "--out",
            path(&d),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        (out.stdout, fs::read(d.join("bench.csv")).unwrap())
    };
    let (a, csv_a) = run("a");
    let (b, csv_b) = run("b");
    assert_eq!(a, b);
    assert_eq!(csv_a, csv_b);
    let table = String::from_utf8(a).unwrap();
    for name in ["bqp", "mrf", "matching", "clustering", "tv"] {
        assert!(table.lines().any(|l| l.starts_with(name)), "{table}");
    }
    assert_eq!(String::from_utf8(csv_a).unwrap().lines().count(), 1 + 5 * 4);
}

#[test]
fn parse_errors_name_file_and_line() {
    let tmp = tempfile::tempdir().unwrap();
    write_two_variable_fixture(tmp.path());
    fs::write(
        tmp.path().join("A.mtx"),
        "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 one 2\n",
    )
    .unwrap();
    let out = lpbox(&["solve-bqp", path(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("A.mtx:3"), "{err}");
}

#[test]
fn dimension_mismatch_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    write_two_variable_fixture(tmp.path());
    fs::write(tmp.path().join("b.txt"), "-1\n1\n0\n").unwrap();
    let out = lpbox(&["solve-bqp", path(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("b.txt"));
}

#[test]
fn flags_reach_the_solver_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    write_two_variable_fixture(tmp.path());
    let out = lpbox(&[
        "solve-bqp",
        path(tmp.path()),
        "--rho",
        "0.5",
        "--mu",
        "1.1",
        "--gamma",
        "0.8",
        "--tol",
        "1e-6",
        "--max-iter",
        "300",
        "--freeze-y2",
        "none",
        "--pcg-tol",
        "1e-9",
    ]);
    let p = &stdout_json(&out)["params"];
    assert_eq!(p["rho_init"], serde_json::json!([0.5, 0.5, 0.5, 0.5]));
    assert_eq!(p["mu"], 1.1);
    assert_eq!(p["gamma"], 0.8);
    assert_eq!(p["stop_tol"], 1e-6);
    assert_eq!(p["max_iterations"], 300);
    assert_eq!(p["y2_freeze_at"], Value::Null);
    assert_eq!(p["pcg_tol"], 1e-9);

    let out = lpbox(&["solve-bqp", path(tmp.path()), "--max-iter", "300"]);
    assert_eq!(stdout_json(&out)["params"]["y2_freeze_at"], 150);
    let out = lpbox(&["solve-bqp", path(tmp.path()), "--gamma", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn not_converging_is_a_distinct_exit_status() {
    let tmp = tempfile::tempdir().unwrap();
    write_two_variable_fixture(tmp.path());
    let out = lpbox(&["solve-bqp", path(tmp.path()), "--max-iter", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stdout_json(&out)["status"], "not_converged");
}

#[test]
fn trace_is_written_next_to_the_result() {
    let tmp = tempfile::tempdir().unwrap();
    write_two_variable_fixture(&tmp.path().join("p"));
    let out_dir = tmp.path().join("out");
    let out = lpbox(&[
        "solve-bqp",
        path(&tmp.path().join("p")),
        "--out",
        path(&out_dir),
        "--trace",
    ]);
    assert!(out.status.success());
    let result: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("result.json")).unwrap()).unwrap();
    let trace = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("k,objective,res_z1,res_z2"));
    assert_eq!(
        trace.lines().count() as u64,
        1 + result["iterations"].as_u64().unwrap()
    );

    let out = lpbox(&["solve-bqp", path(&tmp.path().join("p")), "--trace"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn explicit_initial_point_is_checked() {
    let tmp = tempfile::tempdir().unwrap();
    write_two_variable_fixture(tmp.path());
    let x0 = tmp.path().join("x0.txt");
    fs::write(&x0, "0.9\n0.1\n").unwrap();
    let out = lpbox(&["solve-bqp", path(tmp.path()), "--x0", path(&x0)]);
    assert_eq!(stdout_json(&out)["x"], serde_json::json!([1, 0]));
    fs::write(&x0, "0.9\n").unwrap();
    let out = lpbox(&["solve-bqp", path(tmp.path()), "--x0", path(&x0)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn generated_instances_solve_and_match_the_oracle_sense() {
    let tmp = tempfile::tempdir().unwrap();
    for (problem, size, command, maximize) in [
        ("bqp", "8", "solve-bqp", false),
        ("l1", "8", "solve-l1", false),
        ("mrf", "3", "solve-mrf", false),
        ("matching", "4", "solve-matching", true),
        ("clustering", "6", "solve-clustering", false),
    ] {
        let dir = tmp.path().join(problem);
        let gen = lpbox(&[
            "generate",
            problem,
            "--size",
            size,
            "--seed",
            "3",
            "--out",
            path(&dir),
        ]);
        assert!(
            gen.status.success(),
            "{}",
            String::from_utf8_lossy(&gen.stderr)
        );
        let solved = lpbox(&[command, path(&dir), "--seed", "1"]);
        let r = stdout_json(&solved);
        assert!(r["feasible"].as_bool().unwrap(), "{problem}");
        let best = stdout_json(&lpbox(&["oracle", problem, path(&dir)]))["best_objective"]
            .as_f64()
            .unwrap();
        let value = r["objective"].as_f64().unwrap();
        let slack = 1e-9 * best.abs().max(1.0);
        if maximize {
            assert!(value <= best + slack, "{problem}: {value} > {best}");
        } else {
            assert!(value >= best - slack, "{problem}: {value} < {best}");
        }
        if problem != "bqp" && problem != "l1" {
            assert!(!r["solution"].is_null(), "{problem}");
        }
    }
}
