//! Chat-model wire types and client adapters.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attachment {
    pub name: String,
    pub media_type: String,
    /// Base64 of the file bytes.
    pub data: String,
}

impl Attachment {
    pub fn from_bytes(name: impl Into<String>, media_type: impl Into<String>, bytes: &[u8]) -> Attachment {
        Attachment {
            name: name.into(),
            media_type: media_type.into(),
            data: base64::engine::general_purpose::STANDARD.encode(bytes),
        }
    }

    pub fn bytes(&self) -> Option<Vec<u8>> {
        base64::engine::general_purpose::STANDARD.decode(&self.data).ok()
    }
}

/// Media type from a file extension; unknown extensions are octet streams.
pub fn media_type_for(path: &str) -> &'static str {
    let lower = path.to_ascii_lowercase();
    match lower.rsplit_once('.').map(|(_, e)| e) {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("gif") => "image/gif",
        Some("webp") => "image/webp",
        Some("svg") => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attachments: Vec<Attachment>,
    /// Tool invocations made in an assistant turn.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCall>,
}

impl Message {
    pub fn new(role: Role, text: impl Into<String>) -> Message {
        Message {
            role,
            text: text.into(),
            attachments: Vec::new(),
            tool_calls: Vec::new(),
        }
    }

    pub fn with_attachments(mut self, attachments: Vec<Attachment>) -> Message {
        self.attachments = attachments;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Purpose {
    Agent,
    Judge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    /// JSON schema of the arguments object.
    pub parameters: Value,
}

impl ToolSpec {
    pub fn write_file() -> ToolSpec {
        ToolSpec {
            name: "write_file".into(),
            description: "Create or replace a part (*.part.json) or assembly (*.asm.json) file in the workspace. Paths are relative, e.g. parts/blade.part.json or assembly.asm.json.".into(),
            parameters: json!({
                "type": "object",
                "properties": {
                    "path": {"type": "string"},
                    "content": {"type": "string"}
                },
                "required": ["path", "content"]
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRequest {
    pub purpose: Purpose,
    pub messages: Vec<Message>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tools: Vec<ToolSpec>,
    /// Decoding hint; 0 asks for the most deterministic output available.
    pub temperature: f64,
}

impl ModelRequest {
    /// SHA-256 over the request's JSON form, attachments included.
    pub fn digest(&self) -> String {
        let text = serde_json::to_string(self).expect("request serializes");
        hex_digest(text.as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCall {
    #[serde(default)]
    pub id: String,
    pub name: String,
    pub arguments: Value,
}

impl ToolCall {
    pub fn write_file(id: impl Into<String>, path: &str, content: &str) -> ToolCall {
        ToolCall {
            id: id.into(),
            name: "write_file".into(),
            arguments: json!({"path": path, "content": content}),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    pub input_tokens: u64,
    pub output_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResponse {
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCall>,
    #[serde(default)]
    pub usage: Usage,
}

impl ModelResponse {
    pub fn text(text: impl Into<String>) -> ModelResponse {
        ModelResponse {
            text: text.into(),
            tool_calls: Vec::new(),
            usage: Usage::default(),
        }
    }

    pub fn with_tool_calls(mut self, calls: Vec<ToolCall>) -> ModelResponse {
        self.tool_calls = calls;
        self
    }

    pub fn with_usage(mut self, input_tokens: u64, output_tokens: u64) -> ModelResponse {
        self.usage = Usage {
            input_tokens,
            output_tokens,
        };
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum ClientError {
    /// Worth retrying: network failure, timeout, 5xx, rate limit.
    #[error("transport error: {0}")]
    Transport(String),
    /// Not worth retrying: malformed reply, replay divergence, auth failure.
    #[error("protocol error: {0}")]
    Protocol(String),
    /// A scripted or replayed client ran out of responses.
    #[error("client has no more responses")]
    Exhausted,
}

/// A chat model. Implementations must tolerate concurrent use by
/// independent sessions.
pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ModelRequest) -> Result<ModelResponse, ClientError>;
}

pub type Scripted = Result<ModelResponse, ClientError>;

/// Canned responses, one queue for agent turns and one for judge turns.
#[derive(Debug)]
pub struct ScriptedClient {
    agent: Mutex<VecDeque<Scripted>>,
    judge: Mutex<VecDeque<Scripted>>,
    cycle: bool,
}

impl ScriptedClient {
    pub fn new(agent: Vec<ModelResponse>, judge: Vec<ModelResponse>) -> ScriptedClient {
        ScriptedClient::with_results(agent.into_iter().map(Ok).collect(), judge.into_iter().map(Ok).collect())
    }

    /// Like [`ScriptedClient::new`] but entries may be errors.
    pub fn with_results(agent: Vec<Scripted>, judge: Vec<Scripted>) -> ScriptedClient {
        ScriptedClient {
            agent: Mutex::new(agent.into()),
            judge: Mutex::new(judge.into()),
            cycle: false,
        }
    }

    /// Replay each queue from the start once it runs out.
    pub fn cycling(mut self) -> ScriptedClient {
        self.cycle = true;
        self
    }
}

impl ChatClient for ScriptedClient {
    fn complete(&self, request: &ModelRequest) -> Result<ModelResponse, ClientError> {
        let queue = match request.purpose {
            Purpose::Agent => &self.agent,
            Purpose::Judge => &self.judge,
        };
        let mut q = queue.lock().expect("script queue");
        let next = q.pop_front().ok_or(ClientError::Exhausted)?;
        if self.cycle {
            q.push_back(next.clone());
        }
        next
    }
}

/// Plays back a recorded transcript, checking every request against the
/// recorded digest.
#[derive(Debug)]
pub struct ReplayClient {
    entries: Mutex<VecDeque<(String, Scripted)>>,
}

impl ReplayClient {
    /// Build from transcript JSON lines. Reads `request` events and the
    /// `response` or `transport_error` event that follows each.
    pub fn from_transcript(text: &str) -> Result<ReplayClient, String> {
        let mut entries = VecDeque::new();
        let mut pending: Option<String> = None;
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let v: Value = serde_json::from_str(line).map_err(|e| format!("transcript line {}: {e}", n + 1))?;
            match v.get("event").and_then(Value::as_str) {
                Some("request") => {
                    let digest = v
                        .get("digest")
                        .and_then(Value::as_str)
                        .ok_or_else(|| format!("transcript line {}: request without digest", n + 1))?;
                    pending = Some(digest.to_string());
                }
                Some("response") => {
                    let digest = pending
                        .take()
                        .ok_or_else(|| format!("transcript line {}: response without request", n + 1))?;
                    let resp: ModelResponse = serde_json::from_value(v.get("response").cloned().unwrap_or(Value::Null))
                        .map_err(|e| format!("transcript line {}: {e}", n + 1))?;
                    entries.push_back((digest, Ok(resp)));
                }
                Some("transport_error") => {
                    let digest = pending
                        .take()
                        .ok_or_else(|| format!("transcript line {}: error without request", n + 1))?;
                    let msg = v.get("message").and_then(Value::as_str).unwrap_or("").to_string();
                    entries.push_back((digest, Err(ClientError::Transport(msg))));
                }
                Some("client_error") => {
                    let digest = pending
                        .take()
                        .ok_or_else(|| format!("transcript line {}: error without request", n + 1))?;
                    let msg = v.get("message").and_then(Value::as_str).unwrap_or("").to_string();
                    entries.push_back((digest, Err(ClientError::Protocol(msg))));
                }
                _ => {}
            }
        }
        Ok(ReplayClient {
            entries: Mutex::new(entries),
        })
    }

    pub fn remaining(&self) -> usize {
        self.entries.lock().expect("replay queue").len()
    }
}

impl ChatClient for ReplayClient {
    fn complete(&self, request: &ModelRequest) -> Result<ModelResponse, ClientError> {
        let mut q = self.entries.lock().expect("replay queue");
        let (digest, result) = q.pop_front().ok_or(ClientError::Exhausted)?;
        let actual = request.digest();
        if actual != digest {
            return Err(ClientError::Protocol(format!(
                "replay diverged: request digest {actual} does not match recorded {digest}"
            )));
        }
        result
    }
}

pub const ENDPOINT_VAR: &str = "MATEFORGE_ENDPOINT";
pub const API_KEY_VAR: &str = "MATEFORGE_API_KEY";
pub const MODEL_VAR: &str = "MATEFORGE_MODEL";

/// Generic JSON-over-HTTP adapter.
///
/// POSTs `{"model", "temperature", "messages", "tools"}` where each message is
/// `{"role", "content": [{"type": "text", "text"} | {"type": "image",
/// "media_type", "data"}]}`, and expects `{"text", "tool_calls", "usage"}`
/// back. A small proxy maps this onto any vendor API.
pub struct HttpChatClient {
    endpoint: String,
    api_key: Option<String>,
    model: String,
    agent: ureq::Agent,
}

impl std::fmt::Debug for HttpChatClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // the key stays out of logs
        f.debug_struct("HttpChatClient")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .finish_non_exhaustive()
    }
}

impl HttpChatClient {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, model: impl Into<String>) -> HttpChatClient {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(600)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpChatClient {
            endpoint: endpoint.into(),
            api_key,
            model: model.into(),
            agent,
        }
    }

    /// Endpoint, key and model name from the environment.
    pub fn from_env() -> Result<HttpChatClient, String> {
        let endpoint = std::env::var(ENDPOINT_VAR).map_err(|_| format!("{ENDPOINT_VAR} is not set"))?;
        let key = std::env::var(API_KEY_VAR).ok();
        let model = std::env::var(MODEL_VAR).unwrap_or_default();
        Ok(HttpChatClient::new(endpoint, key, model))
    }

    pub fn request_body(&self, request: &ModelRequest) -> Value {
        let messages: Vec<Value> = request
            .messages
            .iter()
            .map(|m| {
                let mut content = vec![json!({"type": "text", "text": m.text})];
                for a in &m.attachments {
                    content.push(json!({"type": "image", "name": a.name, "media_type": a.media_type, "data": a.data}));
                }
                json!({"role": m.role, "content": content, "tool_calls": m.tool_calls})
            })
            .collect();
        json!({
            "model": self.model,
            "purpose": request.purpose,
            "temperature": request.temperature,
            "messages": messages,
            "tools": request.tools,
        })
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, request: &ModelRequest) -> Result<ModelResponse, ClientError> {
        let body = serde_json::to_string(&self.request_body(request)).expect("body serializes");
        let mut req = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send(body.as_str()).map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        match status {
            200..=299 => serde_json::from_str(&text)
                .map_err(|e| ClientError::Protocol(format!("malformed model reply: {e}"))),
            408 | 429 | 500..=599 => Err(ClientError::Transport(format!("HTTP {status}"))),
            _ => Err(ClientError::Protocol(format!("HTTP {status}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(purpose: Purpose) -> ModelRequest {
        ModelRequest {
            purpose,
            messages: vec![Message::new(Role::User, "hi")],
            tools: vec![],
            temperature: 0.0,
        }
    }

    #[test]
    fn scripted_queues_are_separate() {
        let c = ScriptedClient::new(vec![ModelResponse::text("a")], vec![ModelResponse::text("YES")]);
        assert_eq!(c.complete(&req(Purpose::Judge)).unwrap().text, "YES");
        assert_eq!(c.complete(&req(Purpose::Agent)).unwrap().text, "a");
        assert_eq!(c.complete(&req(Purpose::Agent)), Err(ClientError::Exhausted));
    }

    #[test]
    fn cycling_repeats() {
        let c = ScriptedClient::new(vec![ModelResponse::text("a"), ModelResponse::text("b")], vec![]).cycling();
        let texts: Vec<String> = (0..5).map(|_| c.complete(&req(Purpose::Agent)).unwrap().text).collect();
        assert_eq!(texts, ["a", "b", "a", "b", "a"]);
    }

    #[test]
    fn replay_checks_digest() {
        let r = req(Purpose::Agent);
        let line_req = json!({"event": "request", "digest": r.digest()}).to_string();
        let line_resp = json!({"event": "response", "response": ModelResponse::text("ok")}).to_string();
        let client = ReplayClient::from_transcript(&format!("{line_req}\n{line_resp}\n")).unwrap();
        assert_eq!(client.complete(&r).unwrap().text, "ok");

        let client = ReplayClient::from_transcript(&format!("{line_req}\n{line_resp}\n")).unwrap();
        assert!(matches!(client.complete(&req(Purpose::Judge)), Err(ClientError::Protocol(_))));
    }

    #[test]
    fn http_debug_hides_key() {
        let c = HttpChatClient::new("http://localhost:1", Some("sekrit".into()), "m");
        assert!(!format!("{c:?}").contains("sekrit"));
        let body = c.request_body(&req(Purpose::Agent)).to_string();
        assert!(!body.contains("sekrit"));
    }

    #[test]
    fn attachments_round_trip() {
        let a = Attachment::from_bytes("x.svg", media_type_for("x.svg"), b"<svg/>");
        assert_eq!(a.media_type, "image/svg+xml");
        assert_eq!(a.bytes().unwrap(), b"<svg/>");
    }
}
