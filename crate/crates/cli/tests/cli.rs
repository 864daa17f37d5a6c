use std::path::Path;
use std::process::{Command, Output};

use prover_agent::gateway::{Matcher, ModelRole, Script};
use prover_agent::harness::ScriptBook;

const BIN: &str = env!("CARGO_BIN_EXE_prover-agent");

fn statement(name: &str) -> String {
    format!("theorem {name} (n : ℕ) (h : 2 ≤ n) : n ^ 2 ≥ 4 := by sorry")
}

fn proof(name: &str, tail: &str) -> String {
    format!("```lean4\ntheorem {name} (n : ℕ) (h : 2 ≤ n) : n ^ 2 ≥ 4 := by\n  {tail}\n```")
}

fn cli(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .env_remove("PROVER_AGENT_CONFIG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Two problems, one solvable, run with tiny budgets.
fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let lines: Vec<String> = ["mathd_algebra_1", "mathd_algebra_2"]
        .iter()
        .map(|n| {
            serde_json::json!({"name": n, "formal_statement": statement(n), "split": "test", "category": "MATH"})
                .to_string()
        })
        .collect();
    std::fs::write(dir.path().join("set.jsonl"), lines.join("\n")).unwrap();

    let mut book = ScriptBook::default();
    let mut solved = Script::new();
    solved.set_default(ModelRole::InformalReasoner, "Square both sides.");
    solved.push(ModelRole::FormalProver, Matcher::Any, proof("mathd_algebra_1", "nlinarith [h]"));
    book.problems.insert("mathd_algebra_1".into(), solved);
    let mut failing = Script::new();
    failing.set_default(ModelRole::InformalReasoner, "Square both sides.");
    failing.set_default(ModelRole::FormalProver, proof("mathd_algebra_2", "simp -- @error: simp made no progress"));
    book.fallback = Some(failing);
    std::fs::write(dir.path().join("script.json"), serde_json::to_string_pretty(&book).unwrap()).unwrap();

    let toml = "[run]\nrecord_timings = false\n[run.budget]\nn_init = 2\nn_refine = 1\ndepth_limit = 0\n";
    std::fs::write(dir.path().join("agent.toml"), toml).unwrap();
    dir
}

const RUN: [&str; 10] = [
    "--config",
    "agent.toml",
    "run",
    "--dataset",
    "set.jsonl",
    "--ledger",
    "run.jsonl",
    "--script",
    "script.json",
    "--mock-lean",
];

#[test]
fn run_then_report_and_replay() {
    let ws = workspace();
    let out = cli(&RUN, ws.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let live = stdout(&out);
    assert!(live.contains(" 50.0%"), "{live}");
    assert!(live.contains("prover samples: 7"), "{live}");

    let report = cli(&["--config", "agent.toml", "report", "--ledger", "run.jsonl"], ws.path());
    assert!(report.status.success());
    assert_eq!(stdout(&report), live);

    let json = cli(&["--config", "agent.toml", "report", "--ledger", "run.jsonl", "--json"], ws.path());
    let value: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(value["overall"]["solved"], 1);
    assert_eq!(value["overall"]["total"], 2);

    let replay = cli(&["replay", "--ledger", "run.jsonl", "--mock-lean"], ws.path());
    assert!(replay.status.success());
    assert!(stdout(&replay).contains("1 of 1 final proofs re-verified"));

    // rerunning resumes: nothing left to do and the same tables come out
    let again = cli(&RUN, ws.path());
    assert!(again.status.success());
    assert_eq!(stdout(&again), live);
}

#[test]
fn check_reports_success_and_failure() {
    let ws = workspace();
    let good = ws.path().join("good.lean");
    std::fs::write(&good, "theorem t (n : ℕ) : n + 0 = n := by\n  simp").unwrap();
    let out = cli(&["check", "good.lean", "--mock-lean"], ws.path());
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("OK: 0 error(s)"));

    std::fs::write(ws.path().join("stmt.lean"), "theorem t (n : ℕ) : n + 0 = n := by sorry").unwrap();
    let proof_check = cli(&["check", "stmt.lean", "--mock-lean"], ws.path());
    assert!(!proof_check.status.success());
    let stmt_check = cli(&["check", "stmt.lean", "--mock-lean", "--statement-only"], ws.path());
    assert!(stmt_check.status.success());
    assert!(stdout(&stmt_check).contains("sorry: true"));

    std::fs::write(ws.path().join("bad.lean"), "theorem t : 1 = 2 := by\n  norm_num -- @error: norm_num failed").unwrap();
    let bad = cli(&["check", "bad.lean", "--mock-lean"], ws.path());
    assert!(!bad.status.success());
    assert!(stdout(&bad).contains("FAILED: 1 error(s)"));
}

#[test]
fn run_without_endpoints_or_script_is_refused() {
    let ws = workspace();
    let out = Command::new(BIN)
        .args(["run", "--dataset", "set.jsonl", "--ledger", "x.jsonl", "--mock-lean"])
        .current_dir(ws.path())
        .env_remove("PROVER_AGENT_INFORMAL_REASONER_BASE_URL")
        .env_remove("PROVER_AGENT_FORMAL_PROVER_BASE_URL")
        .env_remove("PROVER_AGENT_AUTOFORMALIZER_BASE_URL")
        .env_remove("PROVER_AGENT_CONFIG")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no endpoint configured"));
}

#[test]
fn bad_inputs_fail_cleanly() {
    let ws = workspace();
    std::fs::write(ws.path().join("broken.jsonl"), "{\"name\": 1}\n").unwrap();
    let out = cli(
        &["run", "--dataset", "broken.jsonl", "--ledger", "b.jsonl", "--script", "script.json", "--mock-lean"],
        ws.path(),
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    let missing = cli(&["report", "--ledger", "nope.jsonl"], ws.path());
    assert!(!missing.status.success());
    let bad_env = Command::new(BIN)
        .args(["report", "--ledger", "nope.jsonl"])
        .current_dir(ws.path())
        .env("PROVER_AGENT_N_INIT", "lots")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&bad_env.stderr).contains("PROVER_AGENT_N_INIT"));
}
