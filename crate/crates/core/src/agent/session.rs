//! The iterate, compile, render, refine loop.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::client::{
    hex_digest, media_type_for, Attachment, ChatClient, ClientError, Message, ModelRequest, ModelResponse,
    Purpose, Role, ToolCall, ToolSpec, Usage,
};
use super::clock::Clock;
use super::feedback::{build_feedback, compile_sandbox, IterationCheck};
use super::judge::{judge_request, parse_judgment, Judgment};
use super::sandbox::Sandbox;
use super::telemetry::record_telemetry;
use super::transcript::Transcript;
use crate::diag::{to_json_lines, Diagnostic};
use crate::ir::AssemblyDef;
use crate::visual::{Camera, ViewSpec};

pub const SYSTEM_PROMPT: &str = include_str!("prompts/system.md");

#[derive(Debug, Clone, PartialEq)]
pub struct Budget {
    pub iterations: usize,
    pub calls: Option<u64>,
    pub usd: Option<f64>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            iterations: 40,
            calls: None,
            usd: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TaskInput {
    pub images: Vec<PathBuf>,
    pub description: Option<String>,
    pub budget: Budget,
}

impl TaskInput {
    pub fn describe(text: impl Into<String>) -> TaskInput {
        TaskInput {
            description: Some(text.into()),
            ..TaskInput::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let has_text = self.description.as_deref().is_some_and(|d| !d.trim().is_empty());
        if self.images.is_empty() && !has_text {
            return Err("a task needs at least one image or a description".into());
        }
        if self.budget.usd.is_some_and(|u| !(u >= 0.0)) {
            return Err("the cost budget must be a non-negative number".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pricing {
    pub input_usd_per_million: f64,
    pub output_usd_per_million: f64,
}

impl Pricing {
    pub fn cost(&self, usage: &Usage) -> f64 {
        usage.input_tokens as f64 * self.input_usd_per_million / 1e6
            + usage.output_tokens as f64 * self.output_usd_per_million / 1e6
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub views: Vec<ViewSpec>,
    /// Model calls allowed for editing within one iteration.
    pub calls_per_iteration: usize,
    /// Restart after this many consecutive iterations with identical
    /// (non-empty) diagnostics; `None` never restarts.
    pub restart_after_stall: Option<usize>,
    pub max_retries: u32,
    /// Backoff before retry `k` (from 0) is `backoff_seconds * 2^k`.
    pub backoff_seconds: f64,
    pub pricing: Pricing,
    pub system_prompt: String,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            views: Camera::ALL.iter().map(|c| ViewSpec::new(*c)).collect(),
            calls_per_iteration: 30,
            restart_after_stall: Some(5),
            max_retries: 3,
            backoff_seconds: 1.0,
            pricing: Pricing::default(),
            system_prompt: SYSTEM_PROMPT.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Accepted,
    BudgetExhausted,
    Aborted,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Accepted => "accepted",
            Outcome::BudgetExhausted => "budget_exhausted",
            Outcome::Aborted => "aborted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub index: usize,
    pub seconds: f64,
    pub usd: f64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub calls: u64,
    pub diagnostics: Vec<Diagnostic>,
    pub converged: bool,
    /// Paths relative to the session directory.
    pub renders: Vec<String>,
    pub accepted: bool,
    pub judgment: Option<Judgment>,
}

impl IterationRecord {
    fn new(index: usize) -> IterationRecord {
        IterationRecord {
            index,
            seconds: 0.0,
            usd: 0.0,
            input_tokens: 0,
            output_tokens: 0,
            calls: 0,
            diagnostics: Vec::new(),
            converged: false,
            renders: Vec::new(),
            accepted: false,
            judgment: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub task: TaskInput,
    pub iterations: Vec<IterationRecord>,
    pub final_assembly: Option<AssemblyDef>,
    pub outcome: Outcome,
    pub transcript_path: PathBuf,
    pub restarts: usize,
    /// Why the session was aborted, when it was.
    pub abort_reason: Option<String>,
}

impl Session {
    pub fn total_calls(&self) -> u64 {
        self.iterations.iter().map(|r| r.calls).sum()
    }

    pub fn total_usd(&self) -> f64 {
        self.iterations.iter().map(|r| r.usd).sum()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SessionError + '_ {
    move |source| SessionError::Io {
        path: path.to_path_buf(),
        source,
    }
}

enum CallFailure {
    Client(ClientError),
    Budget,
}

/// Mutable bookkeeping of one run.
struct Run<'a> {
    client: &'a dyn ChatClient,
    clock: &'a dyn Clock,
    config: &'a SessionConfig,
    budget: &'a Budget,
    transcript: Transcript,
    calls: u64,
    usd: f64,
}

impl Run<'_> {
    fn budget_left(&self) -> bool {
        self.budget.calls.is_none_or(|c| self.calls < c) && self.budget.usd.is_none_or(|u| self.usd < u)
    }

    /// One logical call with bounded retries; every attempt is counted.
    fn call(&mut self, request: &ModelRequest, iteration: usize, rec: &mut IterationRecord) -> Result<ModelResponse, CallFailure> {
        let mut attempt = 0u32;
        loop {
            if !self.budget_left() {
                return Err(CallFailure::Budget);
            }
            self.calls += 1;
            rec.calls += 1;
            self.transcript.push(json!({
                "event": "request",
                "iteration": iteration,
                "call": self.calls,
                "purpose": request.purpose,
                "messages": request.messages.len(),
                "digest": request.digest(),
            }));
            match self.client.complete(request) {
                Ok(resp) => {
                    let cost = self.config.pricing.cost(&resp.usage);
                    rec.input_tokens += resp.usage.input_tokens;
                    rec.output_tokens += resp.usage.output_tokens;
                    rec.usd += cost;
                    self.usd += cost;
                    self.transcript.push(json!({
                        "event": "response",
                        "iteration": iteration,
                        "call": self.calls,
                        "response": resp,
                    }));
                    return Ok(resp);
                }
                Err(ClientError::Transport(msg)) => {
                    self.transcript.push(json!({
                        "event": "transport_error",
                        "iteration": iteration,
                        "call": self.calls,
                        "message": msg,
                    }));
                    if attempt >= self.config.max_retries {
                        return Err(CallFailure::Client(ClientError::Transport(msg)));
                    }
                    self.clock.sleep(self.config.backoff_seconds * 2f64.powi(attempt as i32));
                    attempt += 1;
                }
                Err(other) => {
                    self.transcript.push(json!({
                        "event": "client_error",
                        "iteration": iteration,
                        "call": self.calls,
                        "message": other.to_string(),
                    }));
                    return Err(CallFailure::Client(other));
                }
            }
        }
    }
}

fn read_images(task: &TaskInput) -> Result<Vec<Attachment>, SessionError> {
    task.images
        .iter()
        .map(|p| {
            let bytes = fs::read(p).map_err(io_err(p))?;
            let name = p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
            Ok(Attachment::from_bytes(name.clone(), media_type_for(&name), &bytes))
        })
        .collect()
}

fn task_message(task: &TaskInput, images: &[Attachment]) -> Message {
    let mut text = String::from("Build an assembly of this object.");
    if let Some(d) = &task.description {
        text.push_str("\n\n");
        text.push_str(d);
    }
    if !images.is_empty() {
        text.push_str(&format!("\n\n{} reference image(s) attached.", images.len()));
    }
    Message::new(Role::User, text).with_attachments(images.to_vec())
}

fn fresh_history(config: &SessionConfig, task: &TaskInput, images: &[Attachment]) -> Vec<Message> {
    vec![Message::new(Role::System, config.system_prompt.clone()), task_message(task, images)]
}

/// Keep only the newest renders in the conversation.
fn drop_old_renders(history: &mut [Message]) {
    for m in history.iter_mut().skip(2) {
        if m.role == Role::User && !m.attachments.is_empty() {
            m.attachments.clear();
            m.text.push_str("(renders from this iteration are no longer attached)\n");
        }
    }
}

fn apply_tool_call(sandbox: &Sandbox, call: &ToolCall) -> Value {
    if call.name != "write_file" {
        return json!({"id": call.id, "ok": false, "error": format!("unknown tool \"{}\"; the only tool is write_file", call.name)});
    }
    let path = call.arguments.get("path").and_then(Value::as_str);
    let content = call.arguments.get("content").and_then(Value::as_str);
    match (path, content) {
        (Some(path), Some(content)) => match sandbox.write_ir(path, content) {
            Ok(()) => json!({"id": call.id, "ok": true, "path": path}),
            Err(e) => json!({"id": call.id, "ok": false, "error": e}),
        },
        _ => json!({"id": call.id, "ok": false, "error": "write_file needs string arguments \"path\" and \"content\""}),
    }
}

/// Lower is better: error count, then residual norm.
fn score(check: &IterationCheck) -> (usize, f64) {
    let errors = check.diagnostics.iter().filter(|d| d.is_error()).count();
    let residual = check.outcome.as_ref().map_or(f64::INFINITY, |o| o.residual_norm);
    (errors, residual)
}

fn better(a: (usize, f64), b: (usize, f64)) -> bool {
    a.0 < b.0 || a.0 == b.0 && a.1 < b.1
}

fn diagnostics_event(iteration: usize, check: &IterationCheck) -> Value {
    json!({
        "event": "diagnostics",
        "iteration": iteration,
        "converged": check.converged(),
        "lines": check.diagnostics.iter().map(Diagnostic::to_json_line).collect::<Vec<_>>(),
    })
}

/// Run the agent loop in `session_dir`, which is created and populated with
/// the sandbox, renders, `transcript.jsonl` and `telemetry.json`.
pub fn run_session(
    task: &TaskInput,
    client: &dyn ChatClient,
    clock: &dyn Clock,
    session_dir: &Path,
    config: &SessionConfig,
) -> Result<Session, SessionError> {
    task.validate().map_err(SessionError::InvalidTask)?;
    let sandbox = Sandbox::create(session_dir).map_err(io_err(session_dir))?;
    sandbox.init_base().map_err(io_err(session_dir))?;
    let images = read_images(task)?;
    let transcript_path = session_dir.join("transcript.jsonl");
    let transcript = Transcript::to_file(&transcript_path).map_err(io_err(&transcript_path))?;

    let mut run = Run {
        client,
        clock,
        config,
        budget: &task.budget,
        transcript,
        calls: 0,
        usd: 0.0,
    };
    run.transcript.push(json!({
        "event": "session_start",
        "description": task.description,
        "images": images.iter().map(|a| json!({"name": a.name, "sha256": hex_digest(a.data.as_bytes())})).collect::<Vec<_>>(),
        "budget": {"iterations": task.budget.iterations, "calls": task.budget.calls, "usd": task.budget.usd},
    }));

    let mut check = compile_sandbox(&sandbox, 0, &config.views);
    run.transcript.push(diagnostics_event(0, &check));
    let mut best = (score(&check), sandbox.snapshot(), check.clone());
    let mut history = fresh_history(config, task, &images);
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut judge_note: Option<String> = None;
    let mut stall = 0usize;
    let mut last_signature = String::new();
    let mut restarts = 0usize;
    let mut abort_reason = None;

    let outcome = 'session: loop {
        if records.len() >= task.budget.iterations || !run.budget_left() {
            break Outcome::BudgetExhausted;
        }
        let index = records.len() + 1;
        let started = clock.now();
        let mut rec = IterationRecord::new(index);

        drop_old_renders(&mut history);
        let mut bundle = build_feedback(&check);
        if let Some(reason) = judge_note.take() {
            if let Some(m) = bundle.first_mut() {
                m.text.push_str(&format!("\n## Reviewer\nThe last renders were rejected: {reason}\n"));
            }
        }
        history.extend(bundle);

        let mut failure = None;
        for _ in 0..config.calls_per_iteration {
            let request = ModelRequest {
                purpose: Purpose::Agent,
                messages: history.clone(),
                tools: vec![ToolSpec::write_file()],
                temperature: 0.0,
            };
            let resp = match run.call(&request, index, &mut rec) {
                Ok(r) => r,
                Err(f) => {
                    failure = Some(f);
                    break;
                }
            };
            let mut turn = Message::new(Role::Assistant, resp.text.clone());
            turn.tool_calls = resp.tool_calls.clone();
            history.push(turn);
            if resp.tool_calls.is_empty() {
                break;
            }
            for call in &resp.tool_calls {
                let result = apply_tool_call(&sandbox, call);
                run.transcript.push(json!({"event": "tool_result", "iteration": index, "result": result}));
                history.push(Message::new(Role::Tool, result.to_string()));
            }
        }

        check = compile_sandbox(&sandbox, index, &config.views);
        run.transcript.push(diagnostics_event(index, &check));
        rec.diagnostics = check.diagnostics.clone();
        rec.converged = check.converged();
        rec.renders = check.renders.iter().map(|r| r.path.clone()).collect();
        let s = score(&check);
        if better(s, best.0) {
            best = (s, sandbox.snapshot(), check.clone());
        }

        if failure.is_none() && check.is_clean() {
            let renders: Vec<Attachment> = check.renders.iter().map(|r| r.attachment()).collect();
            let request = judge_request(task.description.as_deref(), &images, &renders);
            match run.call(&request, index, &mut rec) {
                Ok(resp) => {
                    let verdict = parse_judgment(&resp.text);
                    run.transcript.push(match &verdict {
                        Judgment::Approve => json!({"event": "judgment", "iteration": index, "verdict": "approve"}),
                        Judgment::Revise(r) => {
                            json!({"event": "judgment", "iteration": index, "verdict": "revise", "reason": r})
                        }
                    });
                    if let Judgment::Revise(r) = &verdict {
                        judge_note = Some(r.clone());
                    }
                    rec.accepted = verdict == Judgment::Approve;
                    rec.judgment = Some(verdict);
                }
                Err(f) => failure = Some(f),
            }
        }
        rec.seconds = clock.now() - started;
        let accepted = rec.accepted;
        records.push(rec);

        match failure {
            Some(CallFailure::Client(e)) => {
                abort_reason = Some(e.to_string());
                break 'session Outcome::Aborted;
            }
            Some(CallFailure::Budget) => break 'session Outcome::BudgetExhausted,
            None => {}
        }
        if accepted {
            break Outcome::Accepted;
        }

        let signature = to_json_lines(&check.diagnostics);
        if check.diagnostics.is_empty() {
            stall = 0;
        } else if signature == last_signature {
            stall += 1;
        } else {
            stall = 1;
        }
        last_signature = signature;
        if let Some(n) = config.restart_after_stall {
            if stall >= n.max(1) {
                if let Err(e) = sandbox.restore(&best.1) {
                    abort_reason = Some(format!("cannot restore the best assembly: {e}"));
                    break Outcome::Aborted;
                }
                check = best.2.clone();
                history = fresh_history(config, task, &images);
                judge_note = None;
                stall = 0;
                last_signature.clear();
                restarts += 1;
                run.transcript.push(json!({"event": "restart", "iteration": index, "restarts": restarts}));
            }
        }
    };

    run.transcript.push(json!({
        "event": "session_end",
        "outcome": outcome.as_str(),
        "iterations": records.len(),
        "restarts": restarts,
    }));

    let final_assembly = sandbox.load().ok();
    let session = Session {
        task: task.clone(),
        iterations: records,
        final_assembly,
        outcome,
        transcript_path,
        restarts,
        abort_reason,
    };
    let telemetry_path = session_dir.join("telemetry.json");
    fs::write(&telemetry_path, record_telemetry(&session)).map_err(io_err(&telemetry_path))?;
    Ok(session)
}
