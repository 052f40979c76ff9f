//! Task files for the command line: what to build, with which client.
//!
//! ```json
//! {
//!   "description": "scissors with two blades and two handles",
//!   "images": ["scissors.png"],
//!   "budget": {"iterations": 20, "calls": 600, "usd": 20.0},
//!   "client": {"kind": "replay", "transcript": "golden.jsonl"},
//!   "pricing": {"input_usd_per_million": 0.5, "output_usd_per_million": 3.0},
//!   "clock": {"kind": "manual", "tick": 1.0},
//!   "views": ["front", "top", "right", "iso"]
//! }
//! ```
//!
//! Relative paths resolve against the task file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::client::{ChatClient, HttpChatClient, ModelResponse, ReplayClient, ScriptedClient};
use super::clock::{Clock, ManualClock, SystemClock};
use super::session::{Budget, Pricing, SessionConfig, TaskInput};
use crate::visual::{Camera, ViewSpec};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct BudgetFile {
    #[serde(default = "default_iterations")]
    iterations: usize,
    #[serde(default)]
    calls: Option<u64>,
    #[serde(default)]
    usd: Option<f64>,
}

fn default_iterations() -> usize {
    40
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ClientSpec {
    /// Reads the environment, see [`HttpChatClient::from_env`].
    Http,
    Replay {
        transcript: PathBuf,
    },
    Scripted {
        #[serde(default)]
        agent: Vec<ModelResponse>,
        #[serde(default)]
        judge: Vec<ModelResponse>,
        #[serde(default)]
        cycle: bool,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ClockSpec {
    System,
    Manual { tick: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PricingFile {
    input_usd_per_million: f64,
    output_usd_per_million: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    images: Vec<PathBuf>,
    #[serde(default)]
    budget: Option<BudgetFile>,
    client: ClientSpec,
    #[serde(default)]
    pricing: Option<PricingFile>,
    #[serde(default)]
    clock: Option<ClockSpec>,
    #[serde(default)]
    views: Option<Vec<String>>,
    #[serde(default)]
    calls_per_iteration: Option<usize>,
    #[serde(default)]
    restart_after_stall: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct TaskFile {
    pub task: TaskInput,
    pub client: ClientSpec,
    pub clock: ClockSpec,
    pub config: SessionConfig,
}

pub fn parse_task_file(text: &str, base_dir: &Path) -> Result<TaskFile, String> {
    let raw: Raw = serde_json::from_str(text).map_err(|e| format!("task file: {e}"))?;
    let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base_dir.join(p) };
    let budget = raw.budget.map_or_else(Budget::default, |b| Budget {
        iterations: b.iterations,
        calls: b.calls,
        usd: b.usd,
    });
    let task = TaskInput {
        images: raw.images.iter().map(resolve).collect(),
        description: raw.description,
        budget,
    };
    task.validate()?;

    let mut config = SessionConfig::default();
    if let Some(names) = raw.views {
        config.views = names
            .iter()
            .map(|n| Camera::parse(n).map(ViewSpec::new).ok_or_else(|| format!("task file: unknown view \"{n}\"")))
            .collect::<Result<_, _>>()?;
    }
    if let Some(p) = raw.pricing {
        config.pricing = Pricing {
            input_usd_per_million: p.input_usd_per_million,
            output_usd_per_million: p.output_usd_per_million,
        };
    }
    if let Some(c) = raw.calls_per_iteration {
        config.calls_per_iteration = c;
    }
    if raw.restart_after_stall.is_some() {
        config.restart_after_stall = raw.restart_after_stall;
    }
    let client = match raw.client {
        ClientSpec::Replay { transcript } => ClientSpec::Replay {
            transcript: resolve(&transcript),
        },
        other => other,
    };
    Ok(TaskFile {
        task,
        client,
        clock: raw.clock.unwrap_or(ClockSpec::System),
        config,
    })
}

pub fn load_task_file(path: &Path) -> Result<TaskFile, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_task_file(&text, path.parent().unwrap_or(Path::new(".")))
}

impl ClientSpec {
    pub fn build(&self) -> Result<Box<dyn ChatClient>, String> {
        Ok(match self {
            ClientSpec::Http => Box::new(HttpChatClient::from_env()?),
            ClientSpec::Replay { transcript } => {
                let text = fs::read_to_string(transcript).map_err(|e| format!("{}: {e}", transcript.display()))?;
                Box::new(ReplayClient::from_transcript(&text)?)
            }
            ClientSpec::Scripted { agent, judge, cycle } => {
                let c = ScriptedClient::new(agent.clone(), judge.clone());
                Box::new(if *cycle { c.cycling() } else { c })
            }
        })
    }
}

impl ClockSpec {
    pub fn build(&self) -> Box<dyn Clock> {
        match *self {
            ClockSpec::System => Box::new(SystemClock::new()),
            ClockSpec::Manual { tick } => Box::new(ManualClock::new(tick)),
        }
    }
}
