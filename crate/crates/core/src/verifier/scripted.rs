//! Deterministic stand-in for Lean, driven by directive comments in the
//! checked source:
//!
//! - `-- @error: <message>` reports an error at that line,
//! - `-- @warning: <message>` and `-- @info: <message>` likewise,
//! - `-- @timeout` makes the check time out.
//!
//! Declarations containing `sorry` get Lean's usual warning. Output is
//! rendered in the toolchain's format and parsed back, so reports go through
//! the same path as real ones.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use super::{
    detect_sorry, render_diagnostics, Diagnostic, Severity, SourceUnit, VerificationReport,
    Verifier, VerifierError, SORRY_WARNING,
};
use crate::extraction::declarations;

#[derive(Debug, Default)]
pub struct DirectiveVerifier {
    checks: AtomicUsize,
    log: Mutex<Vec<SourceUnit>>,
}

impl DirectiveVerifier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn checks(&self) -> usize {
        self.checks.load(Ordering::SeqCst)
    }

    /// Every unit checked so far, in call order.
    pub fn checked_units(&self) -> Vec<SourceUnit> {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

fn directive_diagnostics(file: &str, text: &str) -> (Vec<Diagnostic>, bool) {
    let mut diags = Vec::new();
    let mut timed_out = false;
    for (idx, line) in text.lines().enumerate() {
        let Some(pos) = line.find("-- @") else { continue };
        let directive = &line[pos + 4..];
        let col = line[..pos].chars().count() as u32;
        let (severity, msg) = if let Some(m) = directive.strip_prefix("error:") {
            (Severity::Error, m)
        } else if let Some(m) = directive.strip_prefix("warning:") {
            (Severity::Warning, m)
        } else if let Some(m) = directive.strip_prefix("info:") {
            (Severity::Info, m)
        } else {
            if directive.trim() == "timeout" {
                timed_out = true;
            }
            continue;
        };
        diags.push(Diagnostic {
            file: file.to_string(),
            line: idx as u32 + 1,
            col,
            severity,
            message: msg.trim().replace("\\n", "\n"),
        });
    }
    (diags, timed_out)
}

fn sorry_warnings(file: &str, text: &str) -> Vec<Diagnostic> {
    let decls = declarations(text);
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::new();
    for (i, decl) in decls.iter().enumerate() {
        let end = decls.get(i + 1).map(|d| d.line - 1).unwrap_or(lines.len());
        let span = lines[decl.line - 1..end].join("\n");
        if detect_sorry(&span) {
            let line_start = text[..decl.name_offset].rfind('\n').map_or(0, |i| i + 1);
            let col = text[line_start..decl.name_offset].chars().count() as u32;
            out.push(Diagnostic {
                file: file.to_string(),
                line: decl.line as u32,
                col,
                severity: Severity::Warning,
                message: SORRY_WARNING.to_string(),
            });
        }
    }
    out
}

impl Verifier for DirectiveVerifier {
    fn check(&self, unit: &SourceUnit, timeout: Duration) -> Result<VerificationReport, VerifierError> {
        if timeout.is_zero() {
            return Err(VerifierError::InvalidTimeout);
        }
        self.checks.fetch_add(1, Ordering::SeqCst);
        self.log.lock().unwrap_or_else(|e| e.into_inner()).push(unit.clone());

        let file = format!("{}.lean", unit.unit_id);
        let text = unit.text();
        let (mut diags, timed_out) = directive_diagnostics(&file, &text);
        if timed_out {
            return Ok(VerificationReport::from_run(unit, None, String::new(), Duration::ZERO, true, None));
        }
        diags.extend(sorry_warnings(&file, &text));
        diags.sort_by_key(|d| (d.line, d.col));
        let failed = diags.iter().any(|d| d.severity == Severity::Error);
        let raw = render_diagnostics(&diags);
        Ok(VerificationReport::from_run(
            unit,
            Some(if failed { 1 } else { 0 }),
            raw,
            Duration::ZERO,
            false,
            None,
        ))
    }
}
