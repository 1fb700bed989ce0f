use std::process::{Command, Output};

fn nestot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nestot"))
        .args(args)
        .env_remove("NESTOT_GRID")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    rd.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn solve_reports_table_one_constant() {
    let o = nestot(&["solve", "--problem", "congestion", "--example", "E1", "--n", "3", "--measure", "uniform", "--method", "nested-bisection"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 1);
    let c: f64 = r[0][2].parse().unwrap();
    assert!((c + 1.1532).abs() < 2e-3, "{c}");
    assert_eq!(r[0][7], "SUCCESS");
}

#[test]
fn check_flags_quarter_circle_under_product_measure() {
    let o = nestot(&["check", "--example", "E3", "--n", "3", "--measure", "product_xy", "--grid", "128"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "not nested");
}

#[test]
fn certify_quadratic_profile() {
    let o = nestot(&["certify", "--example", "E2", "--A", "8", "--n", "12", "--grid", "128"]);
    assert_eq!(stdout(&o).trim(), "guaranteed nested");
    let o = nestot(&["certify", "--A", "1", "--n", "12", "--grid", "128"]);
    assert_eq!(stdout(&o).trim(), "not certified");
}

#[test]
fn benchmark_is_deterministic_and_complete() {
    let args = ["benchmark", "--example", "E1", "--grid", "64", "--ns", "3,6"];
    let a = nestot(&args);
    let b = nestot(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "identical configuration must give identical bytes");
    let r = rows(&stdout(&a));
    assert_eq!(r.len(), 8);
    for row in &r {
        assert!(row.iter().all(|c| !c.is_empty()));
        assert!(["SUCCESS", "FAILED", "NOT_NESTED"].contains(&row[7].as_str()));
    }
    // Columns of one N share one C.
    for chunk in r.chunks(4) {
        let cs: Vec<f64> = chunk.iter().map(|row| row[2].parse().unwrap()).collect();
        assert!(cs.iter().all(|c| (c - cs[0]).abs() < 1e-3), "{cs:?}");
    }
}

#[test]
fn empty_benchmark_has_only_a_header() {
    let o = nestot(&["benchmark", "--ns"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "method,N,C,time_s,iterations,damping_steps,residual,status");
}

#[test]
fn sweep_reaches_one_and_turns_infeasible() {
    let o = nestot(&["sweep", "--example", "E3", "--n", "6", "--grid", "128", "--from=-6", "--to", "0", "--step", "0.5"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 13);
    assert_eq!(r.last().unwrap()[1], "INFEASIBLE");
    let o = nestot(&["sweep", "--example", "E3", "--n", "6", "--grid", "128", "--values=-20"]);
    let e: f64 = rows(&stdout(&o))[0][1].parse().unwrap();
    assert!(e >= 0.99);
}

#[test]
fn config_errors_exit_with_two() {
    assert_eq!(nestot(&["solve", "--n", "0"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"exmaple": "E1"}"#).unwrap();
    assert_eq!(nestot(&["solve", "--config", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(nestot(&["solve", "--example", "E9"]).status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_three_and_still_reports() {
    let o = nestot(&["solve", "--example", "E1", "--measure", "product_xy", "--method", "newton", "--grid", "128"]);
    assert_eq!(o.status.code(), Some(3));
    let r = rows(&stdout(&o));
    assert_eq!(r[0][7], "FAILED");
}

#[test]
fn config_file_with_flag_override_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let csv_path = dir.path().join("out.csv");
    let svg_path = dir.path().join("out.svg");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"problem": "hedonic", "example": "E1", "N": 12, "grid": 64, "csv": {:?}, "svg": {:?}}}"#,
            csv_path.to_str().unwrap(),
            svg_path.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = nestot(&["solve", "--config", cfg.to_str().unwrap(), "--n", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&std::fs::read_to_string(&csv_path).unwrap());
    assert_eq!((r[0][0].as_str(), r[0][1].as_str()), ("hedonic_nested_bisection", "3"));
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<?xml") && svg.matches("<circle").count() == 6);
}

#[test]
fn grid_default_comes_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_nestot"))
        .args(["solve", "--n", "2"])
        .env("NESTOT_GRID", "4")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "grid 4 is below the minimum and must be rejected");
}
