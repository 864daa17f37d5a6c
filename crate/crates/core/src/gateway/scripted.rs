//! Deterministic backend that answers from per-role scripts.
//!
//! Each role owns an ordered list of entries. A call consumes the first entry
//! whose matcher accepts the prompt; when none does, the role's default
//! answer is used if one is set, otherwise the call fails with
//! [`GatewayError::ScriptExhausted`]. Token usage is a whitespace word count.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::wire::{request_body, response_body};
use super::{word_count, Backend, CompletionRequest, CompletionResponse, GatewayError, ModelRole, Usage};

const MODEL: &str = "scripted";

/// Hex sha256 of a prompt.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Matcher {
    #[default]
    Any,
    Contains(String),
    /// Prefix of the prompt's hex sha256.
    PromptHash(String),
}

impl Matcher {
    pub fn matches(&self, prompt: &str) -> bool {
        match self {
            Matcher::Any => true,
            Matcher::Contains(needle) => prompt.contains(needle.as_str()),
            Matcher::PromptHash(prefix) => prompt_hash(prompt).starts_with(prefix.as_str()),
        }
    }
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(default, rename = "match")]
    pub matcher: Matcher,
    pub response: String,
    /// How many calls this entry answers before it is used up.
    #[serde(default = "one")]
    pub times: u32,
    /// Reported finish reason; `length` marks truncation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finish_reason: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoleScript {
    pub entries: Vec<ScriptEntry>,
    pub default: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Script {
    pub informal_reasoner: RoleScript,
    pub formal_prover: RoleScript,
    pub autoformalizer: RoleScript,
}

impl Script {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Script that replays recorded exchanges: every prompt is matched by
    /// hash and answered with the recorded text, in recorded order.
    pub fn from_exchanges<'a>(exchanges: impl IntoIterator<Item = (ModelRole, &'a str, &'a str)>) -> Self {
        let mut script = Script::new();
        for (role, prompt, response) in exchanges {
            script.push(role, Matcher::PromptHash(prompt_hash(prompt)), response);
        }
        script
    }

    pub fn role(&self, role: ModelRole) -> &RoleScript {
        match role {
            ModelRole::InformalReasoner => &self.informal_reasoner,
            ModelRole::FormalProver => &self.formal_prover,
            ModelRole::Autoformalizer => &self.autoformalizer,
        }
    }

    pub fn role_mut(&mut self, role: ModelRole) -> &mut RoleScript {
        match role {
            ModelRole::InformalReasoner => &mut self.informal_reasoner,
            ModelRole::FormalProver => &mut self.formal_prover,
            ModelRole::Autoformalizer => &mut self.autoformalizer,
        }
    }

    pub fn push(&mut self, role: ModelRole, matcher: Matcher, response: impl Into<String>) -> &mut Self {
        self.push_n(role, matcher, response, 1)
    }

    pub fn push_n(&mut self, role: ModelRole, matcher: Matcher, response: impl Into<String>, times: u32) -> &mut Self {
        self.role_mut(role).entries.push(ScriptEntry {
            matcher,
            response: response.into(),
            times,
            finish_reason: None,
        });
        self
    }

    pub fn set_default(&mut self, role: ModelRole, response: impl Into<String>) -> &mut Self {
        self.role_mut(role).default = Some(response.into());
        self
    }
}

#[derive(Debug)]
struct Queue {
    entries: VecDeque<ScriptEntry>,
    default: Option<String>,
}

/// One answered call, in the order calls were made.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptedCall {
    pub role: ModelRole,
    pub prompt_hash: String,
}

#[derive(Debug)]
pub struct ScriptedBackend {
    queues: [Mutex<Queue>; 3],
    calls: Mutex<Vec<ScriptedCall>>,
}

impl ScriptedBackend {
    pub fn new(script: Script) -> Self {
        let queue = |r: RoleScript| {
            Mutex::new(Queue {
                entries: r.entries.into_iter().filter(|e| e.times > 0).collect(),
                default: r.default,
            })
        };
        Self {
            queues: [
                queue(script.informal_reasoner),
                queue(script.formal_prover),
                queue(script.autoformalizer),
            ],
            calls: Mutex::new(Vec::new()),
        }
    }

    /// Scripted answers not yet consumed for `role` (defaults excluded).
    pub fn remaining(&self, role: ModelRole) -> usize {
        let q = self.queues[role as usize].lock().unwrap_or_else(|e| e.into_inner());
        q.entries.iter().map(|e| e.times as usize).sum()
    }

    pub fn calls(&self) -> Vec<ScriptedCall> {
        self.calls.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn answer(&self, role: ModelRole, prompt: &str) -> Result<(String, Option<String>), GatewayError> {
        let mut q = self.queues[role as usize].lock().unwrap_or_else(|e| e.into_inner());
        let hit = q.entries.iter().position(|e| e.matcher.matches(prompt));
        let answer = match hit {
            Some(i) => {
                let entry = &mut q.entries[i];
                entry.times -= 1;
                let out = (entry.response.clone(), entry.finish_reason.clone());
                if entry.times == 0 {
                    q.entries.remove(i);
                }
                out
            }
            None => (q.default.clone().ok_or(GatewayError::ScriptExhausted(role))?, None),
        };
        // logged under the role lock so per-role order is the consumption order
        self.calls.lock().unwrap_or_else(|e| e.into_inner()).push(ScriptedCall {
            role,
            prompt_hash: prompt_hash(prompt),
        });
        Ok(answer)
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        let (text, finish) = self.answer(req.role, &req.prompt)?;
        let finish = finish.unwrap_or_else(|| "stop".into());
        let usage = Usage {
            prompt_tokens: word_count(&req.prompt),
            completion_tokens: word_count(&text),
        };
        Ok(CompletionResponse {
            response_body: response_body(MODEL, &text, &finish, usage),
            request_body: request_body(MODEL, req),
            truncated: finish == "length",
            finish_reason: Some(finish),
            text,
            usage,
            latency: Duration::ZERO,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::Sampling;

    fn req(role: ModelRole, prompt: &str) -> CompletionRequest {
        CompletionRequest {
            role,
            prompt: prompt.into(),
            sampling: Sampling { temperature: 1.0, max_tokens: 64, seed: None },
        }
    }

    #[test]
    fn exhaustion_is_an_error() {
        let mut s = Script::new();
        s.push(ModelRole::FormalProver, Matcher::Any, "a").push(ModelRole::FormalProver, Matcher::Any, "b");
        let b = ScriptedBackend::new(s);
        assert_eq!(b.complete(&req(ModelRole::FormalProver, "p")).unwrap().text, "a");
        assert_eq!(b.complete(&req(ModelRole::FormalProver, "p")).unwrap().text, "b");
        assert_eq!(
            b.complete(&req(ModelRole::FormalProver, "p")).unwrap_err(),
            GatewayError::ScriptExhausted(ModelRole::FormalProver)
        );
    }

    #[test]
    fn substring_routing() {
        let mut s = Script::new();
        s.push(ModelRole::InformalReasoner, Matcher::Contains("Lemma".into()), "lemma fixture")
            .push(ModelRole::InformalReasoner, Matcher::Any, "proof sketch");
        let b = ScriptedBackend::new(s);
        assert_eq!(b.complete(&req(ModelRole::InformalReasoner, "### Lemma 1: x")).unwrap().text, "lemma fixture");
        assert_eq!(b.complete(&req(ModelRole::InformalReasoner, "anything")).unwrap().text, "proof sketch");
    }

    #[test]
    fn roles_are_isolated() {
        let mut s = Script::new();
        s.push(ModelRole::FormalProver, Matcher::Any, "prover");
        let b = ScriptedBackend::new(s);
        assert_eq!(
            b.complete(&req(ModelRole::Autoformalizer, "p")).unwrap_err(),
            GatewayError::ScriptExhausted(ModelRole::Autoformalizer)
        );
        assert_eq!(b.remaining(ModelRole::FormalProver), 1);
    }

    #[test]
    fn default_answers_after_entries() {
        let mut s = Script::new();
        s.push_n(ModelRole::FormalProver, Matcher::Any, "x", 2).set_default(ModelRole::FormalProver, "d");
        let b = ScriptedBackend::new(s);
        let texts: Vec<_> = (0..4).map(|_| b.complete(&req(ModelRole::FormalProver, "p")).unwrap().text).collect();
        assert_eq!(texts, ["x", "x", "d", "d"]);
    }

    #[test]
    fn hash_matcher_and_usage() {
        let mut s = Script::new();
        s.push(ModelRole::FormalProver, Matcher::PromptHash(prompt_hash("two words")[..12].into()), "three word answer");
        let b = ScriptedBackend::new(s);
        let r = b.complete(&req(ModelRole::FormalProver, "two words")).unwrap();
        assert_eq!(r.usage, Usage { prompt_tokens: 2, completion_tokens: 3 });
        assert_eq!(r.response_body["choices"][0]["message"]["content"], "three word answer");
    }

    #[test]
    fn truncation_is_reported() {
        let s = Script::from_json(
            r#"{"formal_prover": {"entries": [{"response": "", "finish_reason": "length"}]}}"#,
        )
        .unwrap();
        let r = ScriptedBackend::new(s).complete(&req(ModelRole::FormalProver, "p")).unwrap();
        assert!(r.truncated);
        assert!(r.text.is_empty());
    }

    #[test]
    fn json_scripts() {
        let s = Script::from_json(
            r#"{"informal_reasoner": {"entries": [{"match": {"contains": "Lemma"}, "response": "L", "times": 2}], "default": "D"}}"#,
        )
        .unwrap();
        assert_eq!(s.informal_reasoner.entries[0].times, 2);
        assert_eq!(s.informal_reasoner.entries[0].matcher, Matcher::Contains("Lemma".into()));
        assert_eq!(s.informal_reasoner.default.as_deref(), Some("D"));
    }
}
