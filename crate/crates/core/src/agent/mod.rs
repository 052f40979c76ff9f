//! The model-driven build loop: prompt, apply file writes, compile, render,
//! judge, repeat.

mod client;
mod clock;
mod feedback;
mod judge;
mod sandbox;
mod session;
mod task_file;
mod telemetry;
mod transcript;

pub use client::{
    media_type_for, Attachment, ChatClient, ClientError, HttpChatClient, Message, ModelRequest, ModelResponse, Purpose,
    ReplayClient, Role, Scripted, ScriptedClient, ToolCall, ToolSpec, Usage, API_KEY_VAR, ENDPOINT_VAR, MODEL_VAR,
};
pub use clock::{Clock, ManualClock, SystemClock};
pub use feedback::{build_feedback, compile_sandbox, IterationCheck, RenderRef};
pub use judge::{judge, judge_request, parse_judgment, Judgment, JUDGE_INSTRUCTIONS, UNPARSEABLE};
pub use sandbox::{check_ir_path, Sandbox, ASSEMBLY_FILE};
pub use session::{
    run_session, Budget, IterationRecord, Outcome, Pricing, Session, SessionConfig, SessionError, TaskInput,
    SYSTEM_PROMPT,
};
pub use task_file::{load_task_file, parse_task_file, ClientSpec, ClockSpec, TaskFile};
pub use telemetry::{format_summary, record_telemetry, totals, trim_number, Totals};
pub use transcript::Transcript;
