//! Access to the three model roles over the chat-completion contract.
//!
//! A [`Gateway`] validates requests, caps in-flight calls per role and
//! retries transport failures with exponential backoff. The wire work is done
//! by a [`Backend`]: [`HttpBackend`] for real endpoints, [`ScriptedBackend`]
//! for deterministic runs.

mod http;
mod scripted;
mod template;
pub mod wire;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::sync::Semaphore;
use crate::verifier::duration_ms;

pub use http::HttpBackend;
pub use scripted::{prompt_hash, Matcher, RoleScript, Script, ScriptEntry, ScriptedBackend, ScriptedCall};
pub use template::{render, TemplateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelRole {
    InformalReasoner,
    FormalProver,
    Autoformalizer,
}

impl ModelRole {
    pub const ALL: [ModelRole; 3] = [ModelRole::InformalReasoner, ModelRole::FormalProver, ModelRole::Autoformalizer];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelRole::InformalReasoner => "informal_reasoner",
            ModelRole::FormalProver => "formal_prover",
            ModelRole::Autoformalizer => "autoformalizer",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ModelRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelRole::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown model role `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Sampling policy for the two kinds of prover call. Informal and
/// autoformalizer calls use the initial settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    /// Temperature for independent initial attempts; diversity drives pass@k.
    pub init_temperature: f64,
    /// Temperature for refinement steps, which want focus.
    pub refine_temperature: f64,
    pub max_tokens: u32,
    /// When set, request `i` of a problem carries seed `base + i`.
    pub base_seed: Option<u64>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            init_temperature: 1.0,
            refine_temperature: 0.7,
            max_tokens: 8_192,
            base_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub role: ModelRole,
    pub prompt: String,
    pub sampling: Sampling,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    pub usage: Usage,
    #[serde(with = "duration_ms")]
    pub latency: Duration,
    pub finish_reason: Option<String>,
    /// The backend stopped at the token limit.
    pub truncated: bool,
    /// Chat-completion bodies exactly as exchanged, for the run ledger.
    pub request_body: serde_json::Value,
    pub response_body: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("no endpoint configured for role {0}")]
    EndpointNotConfigured(ModelRole),
    #[error("endpoint unreachable: {0}")]
    EndpointUnreachable(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    BadStatus { status: u16, body: String },
    #[error("malformed completion response: {0}")]
    MalformedResponse(String),
    #[error("empty completion without truncation")]
    EmptyCompletion,
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("script exhausted for role {0}")]
    ScriptExhausted(ModelRole),
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("template placeholder `{0}` is unbound")]
    UnboundPlaceholder(String),
}

impl GatewayError {
    /// Errors that no amount of further sampling can fix. Everything else is
    /// a failed attempt.
    pub fn is_fatal(&self) -> bool {
        matches!(
            self,
            GatewayError::InvalidRequest(_)
                | GatewayError::EndpointNotConfigured(_)
                | GatewayError::ScriptExhausted(_)
                | GatewayError::UnknownTemplate(_)
                | GatewayError::UnboundPlaceholder(_)
        )
    }
}

/// Performs one request with no retries.
pub trait Backend: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, GatewayError>;
}

impl<B: Backend + ?Sized> Backend for Arc<B> {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        (**self).complete(req)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    /// Base URL up to and including the API version, e.g.
    /// `http://localhost:8000/v1`.
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub request_timeout_secs: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:8000/v1".into(),
            model: String::new(),
            api_key: None,
            request_timeout_secs: 600,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    pub informal_reasoner: Option<EndpointConfig>,
    pub formal_prover: Option<EndpointConfig>,
    pub autoformalizer: Option<EndpointConfig>,
    pub retries: u32,
    pub backoff_initial_ms: u64,
    pub backoff_max_ms: u64,
    /// In-flight cap per role.
    pub max_in_flight: usize,
    pub context_limit: u32,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            informal_reasoner: None,
            formal_prover: None,
            autoformalizer: None,
            retries: 3,
            backoff_initial_ms: 500,
            backoff_max_ms: 8_000,
            max_in_flight: 8,
            context_limit: 16_384,
        }
    }
}

impl GatewayConfig {
    pub fn endpoint(&self, role: ModelRole) -> Option<&EndpointConfig> {
        match role {
            ModelRole::InformalReasoner => self.informal_reasoner.as_ref(),
            ModelRole::FormalProver => self.formal_prover.as_ref(),
            ModelRole::Autoformalizer => self.autoformalizer.as_ref(),
        }
    }

    pub fn endpoint_mut(&mut self, role: ModelRole) -> &mut Option<EndpointConfig> {
        match role {
            ModelRole::InformalReasoner => &mut self.informal_reasoner,
            ModelRole::FormalProver => &mut self.formal_prover,
            ModelRole::Autoformalizer => &mut self.autoformalizer,
        }
    }
}

pub struct Gateway {
    backend: Arc<dyn Backend>,
    config: GatewayConfig,
    in_flight: [Semaphore; 3],
    backend_calls: AtomicU64,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway")
            .field("config", &self.config)
            .field("backend_calls", &self.backend_calls())
            .finish_non_exhaustive()
    }
}

impl Gateway {
    pub fn new(backend: Arc<dyn Backend>, config: GatewayConfig) -> Self {
        let cap = config.max_in_flight.max(1);
        Self {
            backend,
            in_flight: [Semaphore::new(cap), Semaphore::new(cap), Semaphore::new(cap)],
            config,
            backend_calls: AtomicU64::new(0),
        }
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    /// Requests handed to the backend so far, retries included.
    pub fn backend_calls(&self) -> u64 {
        self.backend_calls.load(Ordering::SeqCst)
    }

    /// Highest number of concurrent requests seen for `role`.
    pub fn peak_in_flight(&self, role: ModelRole) -> usize {
        self.in_flight[role.index()].peak()
    }

    fn validate(&self, req: &CompletionRequest) -> Result<(), GatewayError> {
        if req.prompt.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("prompt is empty".into()));
        }
        let max = req.sampling.max_tokens;
        if max == 0 || max > self.config.context_limit {
            return Err(GatewayError::InvalidRequest(format!(
                "max_tokens {max} outside 1..={}",
                self.config.context_limit
            )));
        }
        if req.sampling.temperature.is_nan() || req.sampling.temperature < 0.0 {
            return Err(GatewayError::InvalidRequest("temperature must be non-negative".into()));
        }
        Ok(())
    }

    /// Sends `req`, retrying transport failures up to the configured count.
    pub fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        self.validate(req)?;
        let _permit = self.in_flight[req.role.index()].acquire();
        let mut delay = Duration::from_millis(self.config.backoff_initial_ms);
        let max_delay = Duration::from_millis(self.config.backoff_max_ms);
        let mut attempts = 0u32;
        loop {
            attempts += 1;
            self.backend_calls.fetch_add(1, Ordering::SeqCst);
            match self.backend.complete(req) {
                Ok(resp) if resp.text.is_empty() && !resp.truncated => return Err(GatewayError::EmptyCompletion),
                Ok(resp) => return Ok(resp),
                Err(GatewayError::EndpointUnreachable(msg)) => {
                    if attempts > self.config.retries {
                        return Err(GatewayError::RetriesExhausted { attempts, last: msg });
                    }
                    tracing::warn!(role = %req.role, attempt = attempts, error = %msg, "transport failure, retrying");
                    thread::sleep(delay);
                    delay = (delay * 2).min(max_delay);
                }
                Err(other) => return Err(other),
            }
        }
    }
}

/// Whitespace word count; the scripted backend's notion of a token.
pub fn word_count(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}
