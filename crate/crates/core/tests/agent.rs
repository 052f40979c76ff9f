use std::fs;
use std::path::{Path, PathBuf};

use mateforge::agent::*;
use mateforge::diag::Code;
use mateforge::solver::{build_constraints, check_intersections, solve};

fn fixture_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

/// write_file calls reproducing a fixture directory inside the sandbox.
fn writes_for(name: &str) -> Vec<ToolCall> {
    let dir = fixture_dir(name);
    let mut calls = Vec::new();
    let mut parts: Vec<_> = fs::read_dir(dir.join("parts")).unwrap().map(|e| e.unwrap().path()).collect();
    parts.sort();
    for p in parts {
        let rel = format!("parts/{}", p.file_name().unwrap().to_string_lossy());
        calls.push(ToolCall::write_file(format!("w{}", calls.len()), &rel, &fs::read_to_string(&p).unwrap()));
    }
    let asm = fs::read_to_string(dir.join(format!("{name}.asm.json"))).unwrap();
    calls.push(ToolCall::write_file(format!("w{}", calls.len()), ASSEMBLY_FILE, &asm));
    calls
}

fn edit(calls: Vec<ToolCall>) -> ModelResponse {
    ModelResponse::text("writing files").with_tool_calls(calls).with_usage(1000, 200)
}

fn done() -> ModelResponse {
    ModelResponse::text("done").with_usage(500, 10)
}

fn config() -> SessionConfig {
    SessionConfig {
        pricing: Pricing {
            input_usd_per_million: 1.0,
            output_usd_per_million: 4.0,
        },
        ..SessionConfig::default()
    }
}

fn codes(rec: &IterationRecord) -> Vec<Code> {
    rec.diagnostics.iter().map(|d| d.code).collect()
}

#[test]
fn scissors_in_one_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let client = ScriptedClient::new(vec![edit(writes_for("scissors")), done()], vec![ModelResponse::text("YES")]);
    let task = TaskInput::describe("a pair of scissors");
    let s = run_session(&task, &client, &ManualClock::new(1.0), dir.path(), &config()).unwrap();
    assert_eq!(s.outcome, Outcome::Accepted);
    assert_eq!(s.iterations.len(), 1);
    let r = &s.iterations[0];
    assert!(r.converged && r.accepted);
    assert_eq!(r.calls, 3);
    assert_eq!(r.renders.len(), 4);
    for path in &r.renders {
        assert!(dir.path().join(path).is_file(), "{path}");
    }
    assert!(dir.path().join("renders/iter0_iso.svg").is_file());
    assert_eq!(s.final_assembly.as_ref().unwrap().links.len(), 5);
}

#[test]
fn accepted_assembly_resolves_outside_the_session() {
    let dir = tempfile::tempdir().unwrap();
    let client = ScriptedClient::new(vec![edit(writes_for("scissors")), done()], vec![ModelResponse::text("YES")]);
    let s = run_session(&TaskInput::describe("scissors"), &client, &ManualClock::new(0.0), dir.path(), &config()).unwrap();
    assert_eq!(s.outcome, Outcome::Accepted);
    let def = mateforge::ir::load_assembly_file(&dir.path().join(ASSEMBLY_FILE)).unwrap();
    assert!(mateforge::ir::validate_assembly(&def).iter().all(|d| !d.is_error()));
    let out = solve(&build_constraints(&def), None);
    assert!(out.converged);
    assert!(check_intersections(&def, &out.poses).is_empty());
}

#[test]
fn invalid_json_forever_exhausts_the_iteration_budget() {
    let dir = tempfile::tempdir().unwrap();
    let bad = edit(vec![ToolCall::write_file("w", ASSEMBLY_FILE, "{\"parts\": [")]);
    let client = ScriptedClient::new(vec![bad], vec![]).cycling();
    let mut task = TaskInput::describe("anything");
    task.budget.iterations = 3;
    let s = run_session(&task, &client, &ManualClock::new(0.0), dir.path(), &config()).unwrap();
    assert_eq!(s.outcome, Outcome::BudgetExhausted);
    assert_eq!(s.iterations.len(), 3);
    for r in &s.iterations {
        assert!(codes(r).contains(&Code::ParseError), "{:?}", codes(r));
        assert_eq!(r.calls, 30);
        assert!(!r.converged);
    }
    // every feedback bundle the model saw carried the parse error
    let transcript = fs::read_to_string(&s.transcript_path).unwrap();
    let bundles = transcript
        .lines()
        .filter(|l| l.contains("\"event\":\"diagnostics\"") && !l.contains("\"iteration\":0"))
        .collect::<Vec<_>>();
    assert_eq!(bundles.len(), 3);
    assert!(bundles.iter().all(|l| l.contains("ParseError")));
}

fn conflict_then_fixed() -> ScriptedClient {
    let mut fixed = writes_for("two_cube");
    fixed.retain(|c| c.arguments["path"] == ASSEMBLY_FILE);
    ScriptedClient::new(
        vec![edit(writes_for("conflict")), done(), edit(fixed), done()],
        vec![ModelResponse::text("YES").with_usage(3000, 5)],
    )
}

#[test]
fn inconsistent_then_corrected() {
    let dir = tempfile::tempdir().unwrap();
    let s = run_session(&TaskInput::describe("two stacked cubes"), &conflict_then_fixed(), &ManualClock::new(1.0), dir.path(), &config()).unwrap();
    assert_eq!(s.outcome, Outcome::Accepted);
    assert_eq!(s.iterations.len(), 2);
    assert!(codes(&s.iterations[0]).contains(&Code::InconsistentConstraints));
    assert!(!s.iterations[0].converged);
    assert_eq!(s.iterations[0].judgment, None, "no judge call on a failing compile");
    assert!(s.iterations[1].accepted);
    // iteration 1 renders carry the failure banner
    let svg = fs::read_to_string(dir.path().join(&s.iterations[0].renders[0])).unwrap();
    assert!(svg.contains("failure-banner"));
}

#[test]
fn telemetry_reconciles() {
    let dir = tempfile::tempdir().unwrap();
    let s = run_session(&TaskInput::describe("cubes"), &conflict_then_fixed(), &ManualClock::new(1.0), dir.path(), &config()).unwrap();
    let t = totals(&s);
    assert_eq!(t.calls, 5);
    assert_eq!(t.calls, s.total_calls());
    assert_eq!(t.input_tokens, 1000 + 500 + 1000 + 500 + 3000);
    assert_eq!(t.output_tokens, 200 + 10 + 200 + 10 + 5);
    let usd = t.input_tokens as f64 * 1e-6 + t.output_tokens as f64 * 4e-6;
    assert!((t.usd - usd).abs() < 1e-12);
    assert!((s.total_usd() - usd).abs() < 1e-12);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("telemetry.json")).unwrap()).unwrap();
    assert_eq!(report["totals"]["calls"], 5);
    assert_eq!(report["iterations"].as_array().unwrap().len(), 2);
    assert_eq!(report["per_iteration"]["calls"], 2.5);
    assert_eq!(report["outcome"], "accepted");
}

#[test]
fn empty_session_has_zero_totals() {
    let dir = tempfile::tempdir().unwrap();
    let mut task = TaskInput::describe("x");
    task.budget.iterations = 0;
    let client = ScriptedClient::new(vec![], vec![]);
    let s = run_session(&task, &client, &ManualClock::new(1.0), dir.path(), &config()).unwrap();
    assert_eq!(s.outcome, Outcome::BudgetExhausted);
    assert!(s.iterations.is_empty());
    assert_eq!(totals(&s), Totals::default());
    let report = fs::read_to_string(dir.path().join("telemetry.json")).unwrap();
    assert!(report.contains(r#""totals": {"seconds": 0, "usd": 0, "input_tokens": 0, "output_tokens": 0, "calls": 0}"#), "{report}");
}

#[test]
fn runs_are_byte_identical_and_replayable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let task = TaskInput::describe("two stacked cubes");
    let sa = run_session(&task, &conflict_then_fixed(), &ManualClock::new(1.0), a.path(), &config()).unwrap();
    let sb = run_session(&task, &conflict_then_fixed(), &ManualClock::new(1.0), b.path(), &config()).unwrap();
    let ta = fs::read(a.path().join("transcript.jsonl")).unwrap();
    assert_eq!(ta, fs::read(b.path().join("transcript.jsonl")).unwrap());
    assert_eq!(fs::read(a.path().join("telemetry.json")).unwrap(), fs::read(b.path().join("telemetry.json")).unwrap());
    assert_eq!(sa.iterations, sb.iterations);

    let replay = ReplayClient::from_transcript(std::str::from_utf8(&ta).unwrap()).unwrap();
    let sc = run_session(&task, &replay, &ManualClock::new(1.0), c.path(), &config()).unwrap();
    assert_eq!(sc.outcome, Outcome::Accepted);
    assert_eq!(replay.remaining(), 0);
    assert_eq!(ta, fs::read(c.path().join("transcript.jsonl")).unwrap());
    for r in &sa.iterations[1].renders {
        assert_eq!(fs::read(a.path().join(r)).unwrap(), fs::read(c.path().join(r)).unwrap());
    }
}

#[test]
fn replay_divergence_aborts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_session(&TaskInput::describe("cubes"), &conflict_then_fixed(), &ManualClock::new(1.0), a.path(), &config()).unwrap();
    let replay = ReplayClient::from_transcript(&fs::read_to_string(a.path().join("transcript.jsonl")).unwrap()).unwrap();
    let s = run_session(&TaskInput::describe("something else"), &replay, &ManualClock::new(1.0), b.path(), &config()).unwrap();
    assert_eq!(s.outcome, Outcome::Aborted);
    assert!(s.abort_reason.unwrap().contains("replay diverged"));
}

#[test]
fn transport_errors_are_retried_with_backoff() {
    let dir = tempfile::tempdir().unwrap();
    let flaky = || Err(ClientError::Transport("connection reset".into()));
    let client = ScriptedClient::with_results(vec![flaky(), flaky(), Ok(done())], vec![Ok(ModelResponse::text("YES"))]);
    let s = run_session(&TaskInput::describe("a slab"), &client, &ManualClock::new(0.0), dir.path(), &config()).unwrap();
    assert_eq!(s.outcome, Outcome::Accepted);
    let r = &s.iterations[0];
    assert_eq!(r.calls, 4, "failed attempts count as calls");
    assert_eq!(r.seconds, 1.0 + 2.0);
}

#[test]
fn persistent_transport_failure_aborts() {
    let dir = tempfile::tempdir().unwrap();
    let client = ScriptedClient::with_results(vec![Err(ClientError::Transport("down".into()))], vec![]).cycling();
    let s = run_session(&TaskInput::describe("a slab"), &client, &ManualClock::new(0.0), dir.path(), &config()).unwrap();
    assert_eq!(s.outcome, Outcome::Aborted);
    assert_eq!(s.total_calls(), 4);
    assert_eq!(s.iterations.len(), 1);
    assert!(s.abort_reason.unwrap().contains("down"));
}

#[test]
fn call_budget_is_never_exceeded() {
    let dir = tempfile::tempdir().unwrap();
    let noisy = edit(vec![ToolCall::write_file("w", ASSEMBLY_FILE, "[]")]);
    let client = ScriptedClient::new(vec![noisy], vec![]).cycling();
    let mut task = TaskInput::describe("x");
    task.budget.calls = Some(7);
    let mut cfg = config();
    cfg.calls_per_iteration = 3;
    let s = run_session(&task, &client, &ManualClock::new(0.0), dir.path(), &cfg).unwrap();
    assert_eq!(s.outcome, Outcome::BudgetExhausted);
    assert_eq!(s.total_calls(), 7);
    assert_eq!(s.iterations.len(), 3);
}

#[test]
fn cost_budget_stops_the_loop() {
    let dir = tempfile::tempdir().unwrap();
    let client = ScriptedClient::new(vec![edit(vec![ToolCall::write_file("w", ASSEMBLY_FILE, "{")])], vec![]).cycling();
    let mut task = TaskInput::describe("x");
    task.budget.usd = Some(0.005);
    let s = run_session(&task, &client, &ManualClock::new(0.0), dir.path(), &config()).unwrap();
    assert_eq!(s.outcome, Outcome::BudgetExhausted);
    // each call costs 0.0018
    assert_eq!(s.total_calls(), 3);
}

#[test]
fn stalls_trigger_a_restart_from_the_best_assembly() {
    let dir = tempfile::tempdir().unwrap();
    let mut script = vec![edit(writes_for("conflict")), done()];
    for _ in 0..4 {
        script.push(edit(vec![ToolCall::write_file("w", ASSEMBLY_FILE, "nope")]));
        script.push(done());
    }
    let client = ScriptedClient::new(script, vec![]);
    let mut task = TaskInput::describe("cubes");
    task.budget.iterations = 5;
    let mut cfg = config();
    cfg.restart_after_stall = Some(2);
    let s = run_session(&task, &client, &ManualClock::new(0.0), dir.path(), &cfg).unwrap();
    assert_eq!(s.restarts, 2);
    let transcript = fs::read_to_string(&s.transcript_path).unwrap();
    assert_eq!(transcript.matches("\"event\":\"restart\"").count(), 2);
    // the error-free starting slab outranks every later attempt
    let def = s.final_assembly.unwrap();
    assert_eq!((def.links.len(), def.joints.len()), (1, 0));
}

#[test]
fn judge_revision_is_fed_back() {
    let dir = tempfile::tempdir().unwrap();
    let client = ScriptedClient::new(
        vec![done(), done()],
        vec![ModelResponse::text("NO: handles lack holes"), ModelResponse::text("YES")],
    );
    let s = run_session(&TaskInput::describe("scissors"), &client, &ManualClock::new(0.0), dir.path(), &config()).unwrap();
    assert_eq!(s.outcome, Outcome::Accepted);
    assert_eq!(s.iterations[0].judgment, Some(Judgment::Revise("handles lack holes".into())));
    let transcript = fs::read_to_string(&s.transcript_path).unwrap();
    assert!(transcript.contains("\"verdict\":\"revise\""));
}

#[test]
fn writes_outside_the_sandbox_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let sneaky = edit(vec![ToolCall::write_file("w", "../escape.part.json", "{}")]);
    let client = ScriptedClient::new(vec![sneaky, done()], vec![ModelResponse::text("YES")]);
    let s = run_session(&TaskInput::describe("x"), &client, &ManualClock::new(0.0), dir.path(), &config()).unwrap();
    assert_eq!(s.outcome, Outcome::Accepted);
    assert!(!dir.path().parent().unwrap().join("escape.part.json").exists());
    let transcript = fs::read_to_string(&s.transcript_path).unwrap();
    assert!(transcript.contains("may not leave the workspace"));
}

#[test]
fn invalid_tasks_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let client = ScriptedClient::new(vec![], vec![]);
    let err = run_session(&TaskInput::default(), &client, &ManualClock::new(0.0), dir.path(), &config()).unwrap_err();
    assert!(matches!(err, SessionError::InvalidTask(_)));
}
