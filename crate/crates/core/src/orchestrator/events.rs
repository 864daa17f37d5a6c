//! Event stream emitted while a problem is being worked on. The harness
//! appends these to the run ledger; tests collect them in memory.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{AttemptRecord, FormalLemma, ProblemRef, RunRecord, Stage};
use crate::gateway::{ModelRole, TemplateId, Usage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCallEvent {
    pub problem: String,
    /// 0-based, per problem.
    pub call_index: u64,
    pub stage: Stage,
    pub role: ModelRole,
    pub template: TemplateId,
    pub template_sha256: String,
    /// Full prompt as sent.
    pub prompt: String,
    /// Model text; absent when the call failed.
    pub response: Option<String>,
    pub error: Option<String>,
    pub usage: Usage,
    pub latency_ms: u64,
    pub truncated: bool,
    /// Chat-completion bodies exactly as exchanged.
    pub request_body: serde_json::Value,
    pub response_body: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Started,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    ProblemStarted {
        problem: ProblemRef,
    },
    Stage {
        problem: String,
        stage: Stage,
        /// Name of the theorem being worked on.
        target: String,
        status: StageStatus,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        solved: Option<bool>,
    },
    ModelCall(Box<ModelCallEvent>),
    Attempt {
        problem: String,
        attempt: Box<AttemptRecord>,
    },
    Lemma {
        problem: String,
        lemma: Box<FormalLemma>,
    },
    ProblemFinished {
        record: Box<RunRecord>,
    },
}

impl Event {
    pub fn problem(&self) -> &str {
        match self {
            Event::ProblemStarted { problem } => &problem.name,
            Event::Stage { problem, .. } | Event::Attempt { problem, .. } | Event::Lemma { problem, .. } => problem,
            Event::ModelCall(call) => &call.problem,
            Event::ProblemFinished { record } => &record.problem.name,
        }
    }
}

/// Receiver of run events. Implementations must tolerate calls from several
/// problem threads.
pub trait EventSink: Send + Sync {
    fn emit(&self, event: &Event);
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl EventSink for NullSink {
    fn emit(&self, _: &Event) {}
}

/// Keeps every event in memory.
#[derive(Debug, Default)]
pub struct VecSink {
    events: Mutex<Vec<Event>>,
}

impl VecSink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> Vec<Event> {
        self.events.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

impl EventSink for VecSink {
    fn emit(&self, event: &Event) {
        self.events.lock().unwrap_or_else(|e| e.into_inner()).push(event.clone());
    }
}
