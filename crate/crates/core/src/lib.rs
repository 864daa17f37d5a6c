//! Lemma-guided theorem proving agent for Lean 4.
//!
//! The crate coordinates three model roles (an informal reasoner, a formal
//! prover and an autoformalizer) with a Lean proof checker:
//!
//! - [`gateway`]: chat-completion access per role, prompt templates and a
//!   scripted backend for deterministic runs.
//! - [`verifier`]: source-unit composition, Lean invocation through a bounded
//!   worker pool, and compiler diagnostic parsing.
//! - [`extraction`]: fenced code blocks, informal lemma lists, declared names
//!   and problem-name sanitization.
//! - [`orchestrator`]: direct proving, iterative refinement, the lemma
//!   lifecycle and final synthesis, with sample-budget accounting.
//! - [`harness`]: datasets, the append-only run ledger, resumable benchmark
//!   runs and pass-rate reports.

pub mod extraction;
pub mod gateway;
pub mod harness;
pub mod orchestrator;
pub mod sync;
pub mod verifier;

pub use gateway::{CompletionRequest, CompletionResponse, Gateway, GatewayError, ModelRole};
pub use orchestrator::{BudgetConfig, ProofOutcome, RunConfig, RunRecord};
pub use verifier::{Diagnostic, Severity, SourceUnit, VerificationReport, Verifier};
