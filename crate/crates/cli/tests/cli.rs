use std::path::PathBuf;
use std::process::{Command, Output};

fn mqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mqa"))
        .args(args)
        .env_remove("MQA_LOG")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = mqa(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

/// Data rows of a report CSV as (first column, column named `col`).
fn column(csv: &str, col: &str) -> Vec<(String, String)> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == col).unwrap();
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[k].to_string())
        })
        .collect()
}

#[test]
fn gen_writes_one_line_per_entity() {
    let text = ok(&["gen", "--seed", "1", "--m", "30", "--n", "30", "--R", "3"]);
    assert_eq!(text.lines().count(), 60);
    assert_eq!(text.lines().filter(|l| l.contains(r#""role":"worker""#)).count(), 30);
    assert_eq!(text, ok(&["gen", "--seed", "1", "--m", "30", "--n", "30", "--R", "3"]));
    assert_ne!(text, ok(&["gen", "--seed", "2", "--m", "30", "--n", "30", "--R", "3"]));
}

#[test]
fn gen_without_tasks_is_a_valid_workload() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.jsonl");
    let p = path.to_str().unwrap();
    ok(&["gen", "--m", "0", "--n", "12", "--R", "2", "--out", p]);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.lines().all(|l| l.contains(r#""role":"worker""#)));
    let report = ok(&["run", "--workload", p, "--R", "2", "--timing", "off"]);
    let quality = column(&report, "quality");
    assert_eq!(quality.last().unwrap(), &("TOTAL".to_string(), "0.0".to_string()));
}

#[test]
fn run_reproduces_the_first_assignment_of_the_example() {
    let report = ok(&[
        "run",
        "--workload",
        &fixture("example1.jsonl"),
        "--solver",
        "greedy",
        "--prediction",
        "off",
        "--B",
        "10",
    ]);
    let quality = column(&report, "quality");
    assert_eq!(quality[0], ("1".to_string(), "3.0".to_string()));
    let assigned = column(&report, "n_assigned");
    assert_eq!(assigned[0].1, "1");
}

#[test]
fn oracle_prediction_reaches_the_joint_optimum_of_the_example() {
    let report = ok(&[
        "run",
        "--workload",
        &fixture("example1.jsonl"),
        "--prediction",
        "oracle",
        "--B",
        "10",
        "--timing",
        "off",
    ]);
    let total = column(&report, "quality").pop().unwrap();
    assert_eq!(total.1, "8.0");
    let cost = column(&report, "cost").pop().unwrap();
    assert_eq!(cost.1, "4.0");
}

#[test]
fn random_runs_are_reproducible() {
    let args = ["run", "--solver", "random", "--seed", "7", "--timing", "off", "--format", "json"];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    assert!(a.contains("\"summary\""));
}

#[test]
fn bb_refuses_large_instances() {
    let out = mqa(&["run", "--solver", "bb", "--m", "50", "--n", "50", "--R", "1", "--prediction", "off"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("too large for bb"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn bench_aggregates_per_value_and_solver() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.csv");
    let args = [
        "bench",
        "--vary",
        "B=100,200,300",
        "--solvers",
        "greedy,random",
        "--reps",
        "5",
        "--R",
        "3",
        "--prediction",
        "off",
        "--timing",
        "off",
        "--jobs",
        "3",
        "--check-monotone",
        "--out",
        path.to_str().unwrap(),
    ];
    ok(&args);
    let text = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.contains(",5,")), "{text}");
    let serial = dir.path().join("serial.csv");
    let mut args1 = args;
    args1[14] = "1";
    args1[17] = serial.to_str().unwrap();
    ok(&args1);
    assert_eq!(text, std::fs::read_to_string(&serial).unwrap());
}

#[test]
fn bench_single_value_repeats_the_run() {
    let text = ok(&[
        "bench",
        "--vary",
        "B=200",
        "--solvers",
        "greedy",
        "--reps",
        "2",
        "--R",
        "2",
        "--timing",
        "off",
    ]);
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn bench_rejects_unknown_axis() {
    let out = mqa(&["bench", "--vary", "Z=1,2"]);
    assert!(!out.status.success());
}

#[test]
fn predict_eval_has_one_row_per_window_and_instance() {
    let text = ok(&["predict-eval", "--w", "1..5", "--R", "4"]);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 5 * 3);
    assert!(text.starts_with("window,instance,rel_err_workers,rel_err_tasks"));
}

fn mean_error(workload: &str) -> f64 {
    let text = ok(&["predict-eval", "--workload", workload, "--w", "3", "--gamma", "4"]);
    let errs: Vec<f64> = text
        .lines()
        .skip(1)
        .flat_map(|l| l.split(',').skip(2).map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .collect();
    errs.iter().sum::<f64>() / errs.len() as f64
}

#[test]
fn stationary_streams_forecast_better_than_drifting_ones() {
    let dir = tempfile::tempdir().unwrap();
    let mut errors = Vec::new();
    for walk in ["0", "0.6"] {
        let path = dir.path().join(format!("walk{walk}.jsonl"));
        let p = path.to_str().unwrap();
        ok(&[
            "gen", "--rate", "60", "--walk", walk, "--gamma", "4", "--R", "10", "--seed", "5", "--out", p,
        ]);
        errors.push(mean_error(p));
    }
    assert!(errors[0] < errors[1], "{errors:?}");
}

#[test]
fn flags_override_file_values_which_override_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mqa.toml");
    std::fs::write(&path, "budget = 50.0\nwindow = 4\n").unwrap();
    let p = path.to_str().unwrap();
    let defaults = ok(&["config"]);
    assert!(defaults.contains("budget = 200.0") && defaults.contains("window = 3") && defaults.contains("tasks = 30"));
    let file = ok(&["config", "--config", p]);
    assert!(file.contains("budget = 50.0") && file.contains("window = 4"));
    let flags = ok(&["config", "--config", p, "--B", "70", "--m", "12"]);
    assert!(flags.contains("budget = 70.0") && flags.contains("window = 4") && flags.contains("tasks = 12"));
}

#[test]
fn bad_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "budgett = 5.0\n").unwrap();
    assert!(!mqa(&["config", "--config", path.to_str().unwrap()]).status.success());
    assert!(!mqa(&["run", "--q-range", "2,1"]).status.success());
    assert!(!mqa(&["run", "--w", "1..3"]).status.success());
}

#[test]
fn log_level_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_mqa"))
        .args(["run", "--R", "2", "--timing", "off"])
        .env("MQA_LOG", "info")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("total quality"));
    assert!(mqa(&["run", "--R", "2"]).stderr.is_empty());
}
