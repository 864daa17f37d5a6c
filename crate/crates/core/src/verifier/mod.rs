//! Lean source units, proof checking and compiler-output parsing.

mod diagnostics;
mod lean;
mod scripted;

use std::collections::BTreeSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::extraction::{declared_names, lex, strip_imports};

pub use diagnostics::{parse_diagnostics, render_diagnostics, Diagnostic, Severity};
pub use lean::{LeanConfig, LeanVerifier, PINNED_LEAN_VERSION};
pub use scripted::DirectiveVerifier;

/// Header every unit is compiled with unless a problem overrides it.
pub const DEFAULT_HEADER: &str = "import Mathlib
import Aesop

set_option maxHeartbeats 0

open BigOperators Real Nat Topology Rat";

/// Lean warning text emitted for declarations that still contain `sorry`.
pub const SORRY_WARNING: &str = "declaration uses 'sorry'";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckOrigin {
    /// The body is a statement with a `sorry` proof; only well-formedness is
    /// being checked.
    StatementOnlyCheck,
    ProofCheck,
}

/// One self-contained Lean file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceUnit {
    pub unit_id: String,
    pub header: String,
    pub body: String,
    pub origin: CheckOrigin,
    /// 1-based line of the file where the target text begins.
    pub target_line: u32,
}

impl SourceUnit {
    /// Complete file contents handed to Lean.
    pub fn text(&self) -> String {
        format!("{}\n\n{}", self.header, self.body)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ComposeError {
    #[error("source unit target is empty")]
    EmptyBody,
    #[error("name `{0}` is declared more than once in the unit")]
    DuplicateName(String),
    #[error("statement check expects exactly one theorem, found {0}")]
    NotSingleTheorem(usize),
}

/// Builds `header`, a blank line, the context lemmas in the given order and
/// the target text. Duplicate declaration names are rejected before Lean is
/// ever invoked.
pub fn compose_unit(
    header: &str,
    target: &str,
    context_lemmas: &[String],
    origin: CheckOrigin,
) -> Result<SourceUnit, ComposeError> {
    let target = strip_imports(target);
    if target.trim().is_empty() {
        return Err(ComposeError::EmptyBody);
    }
    let lemmas: Vec<String> = context_lemmas
        .iter()
        .map(|l| strip_imports(l))
        .filter(|l| !l.trim().is_empty())
        .collect();

    let target_names = declared_names(&target);
    if origin == CheckOrigin::StatementOnlyCheck && target_names.len() != 1 {
        return Err(ComposeError::NotSingleTheorem(target_names.len()));
    }
    let mut seen = BTreeSet::new();
    for name in lemmas.iter().flat_map(|l| declared_names(l)).chain(target_names) {
        if !seen.insert(name.clone()) {
            return Err(ComposeError::DuplicateName(name));
        }
    }

    let mut body = String::new();
    for lemma in &lemmas {
        body.push_str(lemma.trim_end());
        body.push_str("\n\n");
    }
    let header_lines = header.lines().count() as u32 + 1;
    let target_line = header_lines + body.lines().count() as u32 + 1;
    body.push_str(target.trim_end());
    body.push('\n');

    let mut unit = SourceUnit {
        unit_id: String::new(),
        header: header.to_string(),
        body,
        origin,
        target_line,
    };
    let digest = Sha256::digest(unit.text().as_bytes());
    unit.unit_id = hex::encode(&digest[..8]);
    Ok(unit)
}

/// True iff `sorry` occurs as a token outside comments and string literals.
pub fn detect_sorry(source: &str) -> bool {
    let masked = lex::mask_non_code(source);
    let found = lex::identifiers(&masked).any(|(_, tok)| tok == "sorry");
    found
}

/// Error count used to rank attempts. A timed-out check ranks below every
/// finite count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorRank {
    Finite(u32),
    TimedOut,
}

impl std::fmt::Display for ErrorRank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ErrorRank::Finite(n) => write!(f, "{n}"),
            ErrorRank::TimedOut => f.write_str("∞"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub success: bool,
    pub diagnostics: Vec<Diagnostic>,
    pub uses_sorry: bool,
    pub raw_output: String,
    #[serde(with = "duration_ms")]
    pub elapsed: Duration,
    pub timed_out: bool,
    pub exit_code: Option<i32>,
    /// Toolchain version the check ran under, when known.
    pub toolchain: Option<String>,
}

impl VerificationReport {
    /// Derives diagnostics, `sorry` usage and the success flag from a finished
    /// (or killed) toolchain run.
    pub fn from_run(
        unit: &SourceUnit,
        exit_code: Option<i32>,
        raw_output: String,
        elapsed: Duration,
        timed_out: bool,
        toolchain: Option<String>,
    ) -> Self {
        let diagnostics = parse_diagnostics(&raw_output);
        let uses_sorry = detect_sorry(&unit.body)
            || diagnostics
                .iter()
                .any(|d| d.severity == Severity::Warning && d.message.contains(SORRY_WARNING));
        let errors = diagnostics.iter().any(|d| d.severity == Severity::Error);
        let sorry_ok = unit.origin == CheckOrigin::StatementOnlyCheck || !uses_sorry;
        let success = exit_code == Some(0) && !errors && sorry_ok && !timed_out;
        Self {
            success,
            diagnostics,
            uses_sorry,
            raw_output,
            elapsed,
            timed_out,
            exit_code,
            toolchain,
        }
    }

    /// Failed report that never reached Lean (no code block, compose error,
    /// model call failure, ...). It carries one error diagnostic so budgets
    /// and ranking treat it like any other failed attempt.
    pub fn synthetic_failure(message: impl Into<String>) -> Self {
        let message = message.into();
        let diag = Diagnostic {
            file: "<agent>".into(),
            line: 1,
            col: 0,
            severity: Severity::Error,
            message,
        };
        Self {
            success: false,
            raw_output: render_diagnostics(std::slice::from_ref(&diag)),
            diagnostics: vec![diag],
            uses_sorry: false,
            elapsed: Duration::ZERO,
            timed_out: false,
            exit_code: None,
            toolchain: None,
        }
    }

    pub fn error_count(&self) -> u32 {
        error_count(self)
    }

    pub fn rank(&self) -> ErrorRank {
        if self.timed_out {
            ErrorRank::TimedOut
        } else {
            ErrorRank::Finite(self.error_count())
        }
    }
}

/// Number of error-severity diagnostics.
pub fn error_count(report: &VerificationReport) -> u32 {
    report
        .diagnostics
        .iter()
        .filter(|d| d.severity == Severity::Error)
        .count() as u32
}

#[derive(Debug, thiserror::Error)]
pub enum VerifierError {
    #[error("Lean workspace missing or incomplete: {0}")]
    WorkspaceMissing(String),
    #[error("toolchain mismatch: pinned {expected}, workspace has {found}")]
    ToolchainMismatch { expected: String, found: String },
    #[error("timeout must be positive")]
    InvalidTimeout,
    #[error("failed to run Lean: {0}")]
    Io(#[from] std::io::Error),
}

/// Anything that can check a [`SourceUnit`].
pub trait Verifier: Send + Sync {
    fn check(&self, unit: &SourceUnit, timeout: Duration) -> Result<VerificationReport, VerifierError>;
}

impl<V: Verifier + ?Sized> Verifier for std::sync::Arc<V> {
    fn check(&self, unit: &SourceUnit, timeout: Duration) -> Result<VerificationReport, VerifierError> {
        (**self).check(unit, timeout)
    }
}

pub(crate) mod duration_ms {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_the_six_line_default() {
        let unit = compose_unit(DEFAULT_HEADER, "theorem t : 1 + 1 = 2 := by norm_num", &[], CheckOrigin::ProofCheck)
            .unwrap();
        let text = unit.text();
        let first_six: Vec<&str> = text.lines().take(6).collect();
        assert_eq!(
            first_six,
            [
                "import Mathlib",
                "import Aesop",
                "",
                "set_option maxHeartbeats 0",
                "",
                "open BigOperators Real Nat Topology Rat"
            ]
        );
        assert_eq!(text, format!("{DEFAULT_HEADER}\n\ntheorem t : 1 + 1 = 2 := by norm_num\n"));
        assert_eq!(unit.target_line, 8);
        assert_eq!(text.lines().nth(7), Some("theorem t : 1 + 1 = 2 := by norm_num"));
    }

    #[test]
    fn lemmas_precede_target_in_order() {
        let lemmas = vec!["theorem l1 : True := trivial".to_string(), "theorem l2 : True := trivial".to_string()];
        let unit = compose_unit(DEFAULT_HEADER, "theorem t : True := l1", &lemmas, CheckOrigin::ProofCheck).unwrap();
        let text = unit.text();
        let p1 = text.find("theorem l1").unwrap();
        let p2 = text.find("theorem l2").unwrap();
        let pt = text.find("theorem t ").unwrap();
        assert!(p1 < p2 && p2 < pt);
        assert_eq!(text.lines().nth(unit.target_line as usize - 1), Some("theorem t : True := l1"));
    }

    #[test]
    fn composition_is_deterministic() {
        let a = compose_unit(DEFAULT_HEADER, "theorem t : True := trivial", &[], CheckOrigin::ProofCheck).unwrap();
        let b = compose_unit(DEFAULT_HEADER, "theorem t : True := trivial", &[], CheckOrigin::ProofCheck).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.unit_id.len(), 16);
    }

    #[test]
    fn duplicate_names_rejected() {
        let lemmas = vec!["theorem l : True := trivial".to_string()];
        let err = compose_unit(DEFAULT_HEADER, "theorem l : True := trivial", &lemmas, CheckOrigin::ProofCheck).unwrap_err();
        assert_eq!(err, ComposeError::DuplicateName("l".into()));
    }

    #[test]
    fn empty_body_rejected() {
        assert_eq!(
            compose_unit(DEFAULT_HEADER, "  \n", &[], CheckOrigin::ProofCheck).unwrap_err(),
            ComposeError::EmptyBody
        );
    }

    #[test]
    fn statement_check_needs_one_theorem() {
        let two = "theorem a : True := sorry\ntheorem b : True := sorry";
        assert_eq!(
            compose_unit(DEFAULT_HEADER, two, &[], CheckOrigin::StatementOnlyCheck).unwrap_err(),
            ComposeError::NotSingleTheorem(2)
        );
    }

    #[test]
    fn imports_in_model_code_are_dropped() {
        let unit = compose_unit(DEFAULT_HEADER, "import Mathlib\ntheorem t : True := trivial", &[], CheckOrigin::ProofCheck)
            .unwrap();
        assert_eq!(unit.text().matches("import Mathlib").count(), 1);
    }

    #[test]
    fn sorry_detection() {
        assert!(detect_sorry("theorem t : P := by sorry"));
        assert!(!detect_sorry("theorem t : P := by\n  -- sorry\n  trivial"));
        assert!(!detect_sorry("theorem t : P := by sorrytactic"));
        assert!(!detect_sorry("/- sorry -/ theorem t : P := by simp"));
        assert!(!detect_sorry(r#"#eval "sorry""#));
        assert!(detect_sorry("have h : Q := by\n    sorry"));
    }

    fn unit(origin: CheckOrigin, body: &str) -> SourceUnit {
        compose_unit(DEFAULT_HEADER, body, &[], origin).unwrap()
    }

    #[test]
    fn statement_check_tolerates_sorry() {
        let u = unit(CheckOrigin::StatementOnlyCheck, "theorem t (n : ℕ) : n = n := by sorry");
        let raw = "x.lean:8:8: warning: declaration uses 'sorry'\n".to_string();
        let r = VerificationReport::from_run(&u, Some(0), raw, Duration::ZERO, false, None);
        assert!(r.success);
        assert!(r.uses_sorry);
    }

    #[test]
    fn proof_check_rejects_sorry() {
        let u = unit(CheckOrigin::ProofCheck, "theorem t (n : ℕ) : n = n := by sorry");
        let r = VerificationReport::from_run(&u, Some(0), String::new(), Duration::ZERO, false, None);
        assert!(!r.success);
        assert!(r.uses_sorry);
        assert_eq!(r.error_count(), 0);
    }

    #[test]
    fn sorry_warning_forces_uses_sorry() {
        // `sorry` hidden behind a macro the tokenizer cannot see
        let u = unit(CheckOrigin::ProofCheck, "theorem t : True := by my_sorry_macro");
        let raw = "x.lean:8:8: warning: declaration uses 'sorry'\n".to_string();
        let r = VerificationReport::from_run(&u, Some(0), raw, Duration::ZERO, false, None);
        assert!(r.uses_sorry);
        assert!(!r.success);
    }

    #[test]
    fn error_counting_and_rank() {
        let u = unit(CheckOrigin::ProofCheck, "theorem t : True := trivial");
        let raw = "f:1:0: error: a\nf:2:0: warning: b\nf:3:0: error: c\n".to_string();
        let r = VerificationReport::from_run(&u, Some(1), raw, Duration::ZERO, false, None);
        assert_eq!(error_count(&r), 2);
        assert_eq!(r.rank(), ErrorRank::Finite(2));
        let timed = VerificationReport::from_run(&u, None, String::new(), Duration::ZERO, true, None);
        assert_eq!(timed.rank(), ErrorRank::TimedOut);
        assert!(ErrorRank::TimedOut > ErrorRank::Finite(u32::MAX));
        assert!(!timed.success);
    }

    #[test]
    fn nonzero_exit_fails_even_without_diagnostics() {
        let u = unit(CheckOrigin::ProofCheck, "theorem t : True := trivial");
        let r = VerificationReport::from_run(&u, Some(1), "lake: unknown package\n".into(), Duration::ZERO, false, None);
        assert!(!r.success);
    }
}
