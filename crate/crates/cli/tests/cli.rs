use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn dso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dso")).args(args).output().expect("spawn dso")
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn all_starts_text_report() {
    let out = dso(&["tsp", &data("five_city.csv"), "all-starts"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("Path from city 4: 4 3 1 2 5 4 weight = 55"), "{text}");
    assert!(text.contains("Best weight 52 from start cities 1, 2, 3, 5"), "{text}");
}

#[test]
fn all_starts_csv_report() {
    let out = dso(&["tsp", &data("five_city.csv"), "all-starts", "--format", "csv"]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("start,sequence,weight"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn alternates_and_brute() {
    let out = dso(&["tsp", &data("five_city.csv"), "alternates", "5"]);
    assert!(stdout(&out).contains("5 1 2 3 4 5 weight = 63"));
    let out = dso(&["tsp", &data("five_city.csv"), "brute"]);
    assert!(stdout(&out).contains("weight = 52"));
}

#[test]
fn out_flag_writes_file_and_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("route.csv");
    let to_file = dso(&["route", "bundled:network_a_failover", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert_eq!(to_file.status.code(), Some(0));
    let direct = dso(&["route", "bundled:network_a_failover", "--format", "csv"]);
    assert_eq!(fs::read(&path).unwrap(), direct.stdout);
}

#[test]
fn time_flag_leaves_stdout_untouched() {
    let plain = dso(&["fitness", &data("network_a_paths.csv")]);
    let timed = dso(&["fitness", &data("network_a_paths.csv"), "--time"]);
    assert_eq!(plain.stdout, timed.stdout);
    assert!(!timed.stderr.is_empty());
}

#[test]
fn malformed_matrix_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "0,1,2\n1,0\n2,1,0\n").unwrap();
    let out = dso(&["tsp", path.to_str().unwrap(), "all-starts"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_file_exits_2() {
    let out = dso(&["fitness", "/nonexistent/population.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_of_scope_function_exits_2() {
    let out = dso(&["bench", "F9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_bundled_scenario_exits_2() {
    assert_eq!(dso(&["route", "bundled:nope"]).status.code(), Some(2));
}

#[test]
fn identical_solutions_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("twins.csv");
    fs::write(&path, "id, speed:Direct, cost:Inverse\nA, 4, 2\nB, 4, 2\n").unwrap();
    let out = dso(&["fitness", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn fitness_csv_ranks_x3_first() {
    let out = dso(&["fitness", &data("network_a_paths.csv"), "--format", "csv"]);
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "solution_id,fitness,rank");
    let x3 = rows.iter().find(|r| r.starts_with("X3,")).unwrap();
    assert!(x3.ends_with(",1"), "{x3}");
}

#[test]
fn bench_csv_is_repeatable_with_seed() {
    let args = ["bench", "F1", "--runs", "3", "--pop", "200", "--seed", "9", "--format", "csv"];
    let a = dso(&args);
    let b = dso(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("function,runs,population_size,avg,stddev,best_overall"));
    let c = dso(&["bench", "F1", "--runs", "3", "--pop", "200", "--seed", "10", "--format", "csv"]);
    assert_ne!(a.stdout, c.stdout);
}
