//! Runs the `hltl` binary on the bundled fixtures and compares exit code and
//! stdout with files under `tests/golden/`. Set `UPDATE_GOLDEN=1` to rewrite
//! them. Stderr is kept too. Wall-clock fields (`runtime_ms`, `timestamp_ms`) are zeroed first.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run_in(dir: &Path, args: &[&str], server: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hltl"));
    cmd.current_dir(dir).args(args).env_remove("HLTL_SERVER").env_remove("RUST_LOG");
    if let Some(url) = server {
        cmd.env("HLTL_SERVER", url);
    }
    cmd.output().expect("spawn hltl")
}

fn zero_clock(v: &mut Value) {
    match v {
        Value::Object(m) => {
            for (k, x) in m.iter_mut() {
                if k == "runtime_ms" || k == "timestamp_ms" {
                    *x = Value::from(0);
                } else {
                    zero_clock(x);
                }
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(zero_clock),
        _ => {}
    }
}

fn normalize(stdout: &[u8]) -> String {
    let text = String::from_utf8_lossy(stdout).into_owned();
    match serde_json::from_str::<Value>(&text) {
        Ok(mut v) => {
            zero_clock(&mut v);
            serde_json::to_string_pretty(&v).unwrap() + "\n"
        }
        Err(_) => text,
    }
}

fn check(name: &str, fixture: &str, args: &[&str]) -> Output {
    let out = run_in(&fixtures(fixture), args, None);
    let mut got = format!("exit: {}\n{}", out.status.code().unwrap_or(-1), normalize(&out.stdout));
    if !out.stderr.is_empty() {
        got += &format!("--- stderr\n{}", String::from_utf8_lossy(&out.stderr));
    }
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.out"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, &got).unwrap();
    } else {
        let want = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(got, want, "{name} differs from golden");
    }
    out
}

const UR: &str = "upper_rack";

#[test]
fn ltl_commands() {
    check("ltl_parse", UR, &["ltl", "parse", "F(a & F b)"]);
    check("ltl_check", UR, &["ltl", "check", "a U b"]);
    check("ltl_check_not_co_safe", UR, &["ltl", "check", "!F a"]);
    check("ltl_check_syntax_error", UR, &["ltl", "check", "G a"]);
    check("ltl_eval", UR, &["ltl", "eval", "F(pickup_saucer & F move_cup_upper_rack)", "--trace", "trace.json"]);
    check("ltl_eval_false", UR, &["ltl", "eval", "F(pickup_cup & F move_saucer_upper_rack)", "--trace", "trace.json"]);
}

#[test]
fn spec_commands() {
    check("spec_validate", UR, &["spec", "validate", "spec.json"]);
    check("spec_satisfies", UR, &["spec", "satisfies", "spec.json", "--trace", "trace.json"]);
    check("spec_satisfies_reversed", UR, &["spec", "satisfies", "spec.json", "--trace", "reversed_trace.json"]);
    check(
        "spec_satisfies_monitor_serial",
        UR,
        &["spec", "satisfies", "spec.json", "--trace", "trace.json", "--mode", "serial", "--method", "monitor"],
    );
    check("spec_dot", UR, &["spec", "dot", "spec.json"]);
}

#[test]
fn htt_commands() {
    check("htt_validate", UR, &["htt", "validate", "tree.json"]);
    let out = check("htt_construct", UR, &["htt", "construct", "tree.json"]);
    let built: Value = serde_json::from_slice(&out.stdout).unwrap();
    let stored: Value = serde_json::from_str(&fs::read_to_string(fixtures(UR).join("spec.json")).unwrap()).unwrap();
    assert_eq!(built, stored);
    check("htt_construct_dishwasher", "dishwasher", &["htt", "construct", "tree.json"]);
}

#[test]
fn pipeline_commands() {
    check("pipeline_run_tree", UR, &["pipeline", "run", "--tree", "tree.json"]);
    check("pipeline_run_fixture", "dishwasher", &["pipeline", "run", "--fixture", "transcript.json"]);
    check(
        "pipeline_translate",
        UR,
        &["pipeline", "translate", "Eventually Task_1.1 is executed and eventually Task_1.2 is executed and always Task_1.1 must precede Task_1.2."],
    );
    check("pipeline_diagnose_clean", UR, &["pipeline", "diagnose", "--tree", "tree.json", "--spec", "spec.json", "--reference", "spec.json"]);
    check(
        "pipeline_diagnose_translation",
        UR,
        &["pipeline", "diagnose", "--tree", "tree.json", "--spec", "unordered_spec.json", "--reference", "spec.json"],
    );
}

#[test]
fn fixture_replay_reproduces_the_stored_spec() {
    let dir = fixtures("dishwasher");
    let out = run_in(&dir, &["pipeline", "run", "--fixture", "transcript.json"], None);
    assert!(out.status.success());
    let run: Value = serde_json::from_slice(&out.stdout).unwrap();
    let stored: Value = serde_json::from_str(&fs::read_to_string(dir.join("spec.json")).unwrap()).unwrap();
    assert_eq!(run["spec"], stored);
}

#[test]
fn plan_and_simulate() {
    check("plan_travel_cost", UR, &["plan", "scenario.json", "spec.json"]);
    check("plan_makespan", UR, &["plan", "scenario.json", "spec.json", "--objective", "makespan"]);
    check("plan_greedy", UR, &["plan", "scenario.json", "spec.json", "--greedy"]);
    check("plan_node_cap", UR, &["plan", "scenario.json", "spec.json", "--node-cap", "5"]);
    check("simulate", UR, &["simulate", "scenario.json", "plan.json", "--spec", "spec.json"]);
    check("simulate_dishwasher", "dishwasher", &["simulate", "scenario.json", "plan.json", "--spec", "spec.json"]);
    check("simulate_wrong_spec", UR, &["simulate", "scenario.json", "plan.json", "--spec", "reversed_spec.json"]);
}

#[test]
fn gen_tasks_and_evaluate() {
    let a = check("gen_tasks_seed_7", UR, &["gen-tasks", "--n-base", "2", "--count", "3", "--seed", "7"]);
    let b = run_in(&fixtures(UR), &["gen-tasks", "--n-base", "2", "--count", "3", "--seed", "7"], None);
    assert_eq!(a.stdout, b.stdout);
    check("gen_tasks_too_many_bases", UR, &["gen-tasks", "--n-base", "11"]);
    check(
        "evaluate",
        UR,
        &["evaluate", "--tasks", "tasks.json", "--robots", "1,2", "--width", "5", "--height", "5", "--timeout-s", "10", "--threads", "1"],
    );
}

#[test]
fn usage_errors_exit_2() {
    check("missing_file", UR, &["spec", "validate", "missing.json"]);
    check("malformed_json", UR, &["spec", "validate", "reversed_trace.json"]);
    check("unknown_flag", UR, &["plan", "scenario.json", "spec.json", "--fast"]);
    check("negative_timeout", UR, &["plan", "scenario.json", "spec.json", "--timeout-s=-1"]);
}

#[test]
fn remote_server_via_env() {
    let server = hltl_server::Background::start().unwrap();
    let url = server.url();
    let out = run_in(&fixtures(UR), &["spec", "validate", "spec.json"], Some(&url));
    assert!(out.status.success());
    let flag = run_in(&fixtures(UR), &["--server", &url, "spec", "validate", "spec.json"], None);
    assert_eq!(out.stdout, flag.stdout);
    drop(server);
    let gone = run_in(&fixtures(UR), &["spec", "validate", "spec.json"], Some(&url));
    assert_eq!(gone.status.code(), Some(1));
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spec.json");
    let out = run_in(&fixtures(UR), &["-o", path.to_str().unwrap(), "htt", "construct", "tree.json"], None);
    assert!(out.status.success() && out.stdout.is_empty());
    let written: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(written["levels"][0][0]["name"], "task_1");
}
