use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hybridbo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybridbo")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn verify_all_passes() {
    let o = hybridbo(&["verify", "--suite", "all"]);
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{out}");
    assert!(out.contains("PASS selection/worked-example"));
    assert!(!out.contains("FAIL"));
}

#[test]
fn config_errors_exit_with_one() {
    let o = hybridbo(&["run", "--problem", "func3c", "--budget", "5", "--pilots", "10"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("budget"), "{}", stderr(&o));

    let o = hybridbo(&["run", "--problem", "func3c", "--kernels", "rbf+matern"]);
    assert_eq!(code(&o), 1);
    for name in ["mlp+matern", "matern+matern", "mlpmatern+matern", "mlp*matern", "mlp+matern+prod"] {
        assert!(stderr(&o).contains(name), "{}", stderr(&o));
    }

    let o = hybridbo(&["run", "--problem", "nope"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("friedman8c"));

    assert_eq!(code(&hybridbo(&["run", "--bogus-flag"])), 1);
    assert_eq!(code(&hybridbo(&["verify", "--suite", "everything"])), 1);
}

#[test]
fn run_directory_reproduces_from_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let o = hybridbo(&["run", "--problem", "func3c", "--budget", "14", "--pilots", "6", "--seed", "3", "--out", a.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["config.json", "trace.csv", "summary.json", "tree.json", "timing.csv"] {
        assert!(a.join(f).exists(), "{f} missing");
    }
    let cfg: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg["criterion"], "r_half");
    assert_eq!(cfg["kernels"].as_array().unwrap().len(), 5);
    assert_eq!(cfg["seed"], 3);

    let b = dir.path().join("b");
    let o = hybridbo(&["run", "--config", a.join("config.json").to_str().unwrap(), "--out", b.to_str().unwrap(), "--parallel"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["config.json", "trace.csv", "summary.json", "tree.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }

    let o = hybridbo(&["dump-tree", a.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("arity [3, 5, 4]"));
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_hybridbo"))
        .args(["run", "--problem", "func3c", "--budget", "6", "--pilots", "6"])
        .env("HYBRIDBO_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("trace.csv").exists());
}

fn write_problem(dir: &Path, script: &str) -> String {
    let p = dir.join("problem.json");
    let problem = serde_json::json!({
        "variables": [
            {"name": "mode", "type": "categorical", "labels": ["fast", "slow"]},
            {"name": "x", "type": "continuous", "lo": -1.0, "hi": 1.0}
        ],
        "direction": "minimize",
        "objective": {"command": ["sh", "-c", script]}
    });
    fs::write(&p, problem.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn command_objective() {
    let dir = tempfile::tempdir().unwrap();
    // echoes the length of its input line, which contains a label and a number
    let problem = write_problem(dir.path(), "read line; echo ${#line}");
    let out = dir.path().join("run");
    let o = hybridbo(&["run", "--problem", &problem, "--budget", "5", "--pilots", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iter,is_pilot,mode,x,y,best_so_far,kernel,decisions,"));
    assert_eq!(trace.lines().count(), 6);
}

#[test]
fn failing_objective_keeps_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(dir.path(), "exit 4");
    let out = dir.path().join("run");
    let o = hybridbo(&["run", "--problem", &problem, "--budget", "5", "--pilots", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("evaluation 0"), "{}", stderr(&o));
    assert!(out.join("trace.csv").exists());
}

#[test]
fn bench_run_writes_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let o = hybridbo(&[
        "bench", "run", "--problem", "rosenbrock", "--method", "hybridd,random", "--budget", "12", "--pilots", "5",
        "--seeds", "0..2", "--criterion", "aic", "--kernels", "mlp+matern,mlp*matern", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for s in 0..=2 {
        assert!(out.join(format!("hybridd/seed_{s}.csv")).exists());
        assert!(out.join(format!("random/seed_{s}.csv")).exists());
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("method,iter,mean,std,runs\n"));
    assert_eq!(summary.lines().count(), 1 + 2 * 12);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 2);
    let trace = fs::read_to_string(out.join("hybridd/seed_1.csv")).unwrap();
    assert!(trace.lines().next().unwrap().ends_with("crit_mlp*matern"));
}
