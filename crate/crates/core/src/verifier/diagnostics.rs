//! Lean compiler output → structured diagnostics.
//!
//! The pinned toolchain prints one record per message:
//!
//! ```text
//! Main.lean:12:2: error: unsolved goals
//! n : ℕ
//! ⊢ False
//! ```
//!
//! Lines that do not open a record continue the message of the open record.
//! Anything before the first record is ignored here (it stays in the raw
//! output of the report).

use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: String,
    /// 1-based.
    pub line: u32,
    /// 0-based, in characters.
    pub col: u32,
    pub severity: Severity,
    pub message: String,
}

static RECORD: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(.+?):(\d+):(\d+): (error|warning|info): ?(.*)$").unwrap()
});

fn open_record(line: &str) -> Option<Diagnostic> {
    let caps = RECORD.captures(line)?;
    let line_no: u32 = caps[2].parse().ok()?;
    if line_no == 0 {
        return None;
    }
    let severity = match &caps[4] {
        "error" => Severity::Error,
        "warning" => Severity::Warning,
        _ => Severity::Info,
    };
    Some(Diagnostic {
        file: caps[1].to_string(),
        line: line_no,
        col: caps[3].parse().ok()?,
        severity,
        message: caps[5].to_string(),
    })
}

fn close(mut diag: Diagnostic) -> Diagnostic {
    let trimmed = diag.message.trim_end_matches('\n').len();
    diag.message.truncate(trimmed);
    diag
}

/// Total parser over compiler output. Malformed text yields an empty list.
pub fn parse_diagnostics(raw_output: &str) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut open: Option<Diagnostic> = None;
    for line in raw_output.split('\n') {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if let Some(diag) = open_record(line) {
            if let Some(done) = open.replace(diag) {
                out.push(close(done));
            }
        } else if let Some(diag) = open.as_mut() {
            diag.message.push('\n');
            diag.message.push_str(line);
        }
    }
    if let Some(done) = open {
        out.push(close(done));
    }
    out
}

/// Renders diagnostics in the toolchain's own format.
pub fn render_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("{}:{}:{}: {}: {}\n", d.file, d.line, d.col, d.severity, d.message))
        .collect()
}
