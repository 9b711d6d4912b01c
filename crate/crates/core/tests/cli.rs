use std::process::{Command, Output};

fn pomdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pomdp")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn solve_emits_stagewise_json() {
    let o = pomdp(&["solve", "--model", "machine-replacement", "--horizon", "5", "--method", "ip"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let stages = v["stage"].as_array().unwrap();
    assert_eq!(stages.len(), 6);
    for s in stages {
        for vec in s.as_array().unwrap() {
            let a = vec["action"].as_u64().unwrap();
            assert!(a == 1 || a == 2);
            assert_eq!(vec["gamma"].as_array().unwrap().len(), 2);
        }
    }
    let q = pomdp(&["solve", "--model", "machine-replacement", "--horizon", "5", "--method", "monahan", "--belief", "0.3,0.7"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&q)).unwrap();
    assert!(v["value"].is_f64() && v["action"].is_u64());
}

#[test]
fn seeded_runs_are_byte_identical() {
    let args = ["myopic", "--table1a", "--samples", "20000", "--paths", "50", "--seed", "5"];
    let a = pomdp(&args);
    let b = pomdp(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let lines: Vec<String> = stdout(&a).lines().map(String::from).collect();
    assert_eq!(lines[0], "rho,vol,L1,L2");
    assert_eq!(lines.len(), 7);
    let sim = ["simulate", "--model", "search", "--horizon", "15", "--policy", "myopic", "--seed", "3"];
    assert_eq!(pomdp(&sim).stdout, pomdp(&sim).stdout);
    let threads = pomdp(&["--threads", "1", "myopic", "--table1a", "--samples", "20000", "--paths", "50", "--seed", "5"]);
    assert_eq!(threads.stdout, a.stdout);
}

#[test]
fn numeric_csv_uses_twelve_significant_digits() {
    let o = pomdp(&["filter", "--model", "example1", "--observations", "1,2,3,3", "--sandwich", "--action", "2"]);
    assert!(o.status.success());
    for line in stdout(&o).lines().skip(1) {
        for field in line.split(',') {
            let digits = field.trim_start_matches('-').replace('.', "");
            assert!(digits.trim_start_matches('0').len() <= 12, "{field}");
        }
    }
}

#[test]
fn check_reports_named_assumptions() {
    let o = pomdp(&["check", "--model", "example1", "--assumptions"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["C", "F1", "F2", "F3'", "F4"] {
        assert!(v["assumptions"][key]["status"].is_string(), "{key}");
    }
    let o = pomdp(&["check", "--order", "0.2,0.3,0.5", "0.4,0.5,0.1"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["mlr"], "GE");
}

#[test]
fn errors_are_json_with_exit_codes() {
    let o = pomdp(&["solve", "--model", "not-a-model"]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"], "Invalid");

    let dir = std::env::temp_dir().join(format!("pomdp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"X":2,"U":1,"Y":2,"P":[[[0.9,0.3],[0.2,0.8]]],"B":[[[0.8,0.2],[0.3,0.7]]],"c":[[1],[2]],"rho":0.9}"#).unwrap();
    let o = pomdp(&["solve", "--model", bad.to_str().unwrap(), "--horizon", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"], "NonStochasticRow");

    let o = pomdp(&["solve", "--model", "machine-replacement", "--horizon", "5", "--budget", "1"]);
    assert_eq!(o.status.code(), Some(4));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn other_subcommands_run() {
    for args in [
        vec!["solve", "--model", "social", "--resolution", "50"],
        vec!["solve", "--model", "sampling", "--resolution", "50"],
        vec!["solve", "--model", "transmission"],
        vec!["solve", "--model", "example1", "--method", "lovejoy", "--horizon", "3", "--resolution", "6"],
        vec!["spsa", "--model", "qd-classical", "--iterations", "5", "--restarts", "2", "--batch", "20"],
        vec!["bandit", "--episodes", "50", "--points", "5", "--resolution", "40"],
        vec!["compare", "--model", "example1", "--garble", "0.9,0.1,0;0.05,0.9,0.05;0,0.1,0.9", "--horizon", "2", "--samples", "50"],
    ] {
        let o = pomdp(&args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stdout.is_empty());
    }
}
