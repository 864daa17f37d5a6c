//! Identifier cleanup and problem-name sanitization.
//!
//! Benchmark names such as `algebra_2varlineareq_fp3zeq11_3tfm1m5zeqn68_feqn10_zeq7`
//! are hard for models to reproduce. The sanitizer keeps the leading
//! underscore-separated segments up to the first one that looks unpronounceable,
//! yielding `algebra`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Thresholds for the pronounceability heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SanitizeConfig {
    /// Segments mixing digits and letters fail when longer than this.
    pub mixed_max_len: usize,
    /// Segments without a vowel fail when longer than this.
    pub vowelless_max_len: usize,
}

impl Default for SanitizeConfig {
    fn default() -> Self {
        Self {
            mixed_max_len: 6,
            vowelless_max_len: 6,
        }
    }
}

/// Makes `raw` a Lean-style identifier: characters outside letters, digits,
/// `_` and `'` become `_`, and a leading digit gets a `p_` prefix.
pub fn to_identifier(raw: &str) -> String {
    let mut out: String = raw
        .trim()
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '_' || c == '\'' { c } else { '_' })
        .collect();
    if out.starts_with(|c: char| !(c.is_alphabetic() || c == '_')) {
        out.insert_str(0, "p_");
    }
    out
}

fn pronounceable(segment: &str, cfg: &SanitizeConfig) -> bool {
    let len = segment.chars().count();
    let has_digit = segment.chars().any(|c| c.is_ascii_digit());
    let has_letter = segment.chars().any(char::is_alphabetic);
    let has_vowel = segment
        .chars()
        .any(|c| matches!(c.to_ascii_lowercase(), 'a' | 'e' | 'i' | 'o' | 'u'));
    let mixed_too_long = has_digit && has_letter && len > cfg.mixed_max_len;
    let vowelless_too_long = !has_vowel && len > cfg.vowelless_max_len;
    !(mixed_too_long || vowelless_too_long)
}

/// Deterministic, idempotent name sanitization. The first segment is always
/// kept; everything from the first unpronounceable segment on is dropped.
pub fn sanitize_name(name: &str, cfg: &SanitizeConfig) -> String {
    let ident = to_identifier(name);
    if ident.is_empty() {
        return "problem".to_string();
    }
    let mut segments = ident.split('_');
    let mut kept = vec![segments.next().unwrap_or_default()];
    for seg in segments {
        if !pronounceable(seg, cfg) {
            break;
        }
        kept.push(seg);
    }
    let out = kept.join("_");
    if out.trim_matches('_').is_empty() {
        return "problem".to_string();
    }
    out
}

/// Assigns run-unique sanitized names; collisions get `_2`, `_3`, ...
#[derive(Debug, Default, Clone)]
pub struct NameRegistry {
    cfg: SanitizeConfig,
    used: BTreeSet<String>,
}

impl NameRegistry {
    pub fn new(cfg: SanitizeConfig) -> Self {
        Self {
            cfg,
            used: BTreeSet::new(),
        }
    }

    pub fn assign(&mut self, name: &str) -> String {
        let base = sanitize_name(name, &self.cfg);
        let mut candidate = base.clone();
        let mut k = 2;
        while self.used.contains(&candidate) {
            candidate = format!("{base}_{k}");
            k += 1;
        }
        self.used.insert(candidate.clone());
        candidate
    }
}
