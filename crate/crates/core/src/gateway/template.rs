//! Prompt templates shipped with the crate.
//!
//! Bodies live in `templates/<id>.txt` and use `{{name}}` placeholders.
//! Substitution is single-pass, so bound text that happens to contain
//! `{{...}}` is never expanded again.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::GatewayError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    DirectInformalProof,
    FormalizeWithInformalGuidance,
    RefineWithDiagnostics,
    GenerateLemmas,
    AutoformalizeStatement,
    SynthesizeWithLemmas,
}

impl TemplateId {
    pub const ALL: [TemplateId; 6] = [
        TemplateId::DirectInformalProof,
        TemplateId::FormalizeWithInformalGuidance,
        TemplateId::RefineWithDiagnostics,
        TemplateId::GenerateLemmas,
        TemplateId::AutoformalizeStatement,
        TemplateId::SynthesizeWithLemmas,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::DirectInformalProof => "direct_informal_proof",
            TemplateId::FormalizeWithInformalGuidance => "formalize_with_informal_guidance",
            TemplateId::RefineWithDiagnostics => "refine_with_diagnostics",
            TemplateId::GenerateLemmas => "generate_lemmas",
            TemplateId::AutoformalizeStatement => "autoformalize_statement",
            TemplateId::SynthesizeWithLemmas => "synthesize_with_lemmas",
        }
    }

    pub fn body(self) -> &'static str {
        match self {
            TemplateId::DirectInformalProof => include_str!("../../templates/direct_informal_proof.txt"),
            TemplateId::FormalizeWithInformalGuidance => {
                include_str!("../../templates/formalize_with_informal_guidance.txt")
            }
            TemplateId::RefineWithDiagnostics => include_str!("../../templates/refine_with_diagnostics.txt"),
            TemplateId::GenerateLemmas => include_str!("../../templates/generate_lemmas.txt"),
            TemplateId::AutoformalizeStatement => include_str!("../../templates/autoformalize_statement.txt"),
            TemplateId::SynthesizeWithLemmas => include_str!("../../templates/synthesize_with_lemmas.txt"),
        }
    }

    /// Hex sha256 of the template body; recorded with every model call.
    pub fn sha256(self) -> String {
        hex::encode(Sha256::digest(self.body().as_bytes()))
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(self) -> Vec<&'static str> {
        let mut seen = BTreeSet::new();
        segments(self.body())
            .filter_map(|s| match s {
                Segment::Hole(name) => seen.insert(name).then_some(name),
                Segment::Text(_) => None,
            })
            .collect()
    }

    pub fn render(self, bindings: &[(&str, &str)]) -> Result<String, GatewayError> {
        let mut out = String::with_capacity(self.body().len());
        for seg in segments(self.body()) {
            match seg {
                Segment::Text(t) => out.push_str(t),
                Segment::Hole(name) => {
                    let value = bindings
                        .iter()
                        .find(|(k, _)| *k == name)
                        .map(|(_, v)| *v)
                        .ok_or_else(|| GatewayError::UnboundPlaceholder(name.to_string()))?;
                    out.push_str(value);
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = GatewayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| GatewayError::UnknownTemplate(s.to_string()))
    }
}

/// Renders a template by its string id.
pub fn render(template_id: &str, bindings: &[(&str, &str)]) -> Result<String, GatewayError> {
    template_id.parse::<TemplateId>()?.render(bindings)
}

enum Segment<'a> {
    Text(&'a str),
    Hole(&'a str),
}

fn is_placeholder(name: &str) -> bool {
    !name.is_empty() && name.bytes().all(|b| b.is_ascii_lowercase() || b == b'_')
}

fn segments(body: &str) -> impl Iterator<Item = Segment<'_>> {
    let mut rest = body;
    std::iter::from_fn(move || {
        if rest.is_empty() {
            return None;
        }
        let mut from = 0;
        while let Some(rel) = rest[from..].find("{{") {
            let open = from + rel;
            if let Some(len) = rest[open + 2..].find("}}") {
                let name = &rest[open + 2..open + 2 + len];
                if is_placeholder(name) {
                    if open > 0 {
                        let text = &rest[..open];
                        rest = &rest[open..];
                        return Some(Segment::Text(text));
                    }
                    rest = &rest[open + 4 + len..];
                    return Some(Segment::Hole(name));
                }
            }
            from = open + 2;
        }
        let text = rest;
        rest = "";
        Some(Segment::Text(text))
    })
}
