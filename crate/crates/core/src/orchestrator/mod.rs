//! The proving loop: direct attempts guided by informal proofs, iterative
//! refinement from compiler feedback, lemma generation and final synthesis.
//!
//! Budgets count formal prover samples. Each proof target (the problem, a
//! lemma, the final synthesis) gets at most `n_init + n_refine` of them.

mod agent;
mod events;
mod seed;
mod signature;
mod stage;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::extraction::{ExtractedProof, InformalLemma};
use crate::gateway::SamplingConfig;
use crate::verifier::{duration_ms, ErrorRank, SourceUnit, VerificationReport, DEFAULT_HEADER};

pub use agent::{feedback_text, Agent};
pub use events::{Event, EventSink, ModelCallEvent, NullSink, StageStatus, VecSink};
pub use seed::select_seed;
pub use signature::{same_statement, signature};
pub use stage::Stage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BudgetConfig {
    /// Initial attempts per target.
    pub n_init: u32,
    /// Refinement steps per target.
    pub n_refine: u32,
    /// Lemmas requested per generation round.
    pub max_lemmas: u32,
    /// Lemma depth limit `D`; top-level lemmas have depth 1, so 0 disables
    /// lemma generation.
    pub depth_limit: u32,
    /// Limit `L` on lemmas attempted per decomposition.
    pub lemma_attempt_limit: u32,
    /// Extra autoformalization tries after the first invalid statement.
    pub statement_formalize_retries: u32,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            n_init: 100,
            n_refine: 300,
            max_lemmas: 3,
            depth_limit: 1,
            lemma_attempt_limit: 6,
            statement_formalize_retries: 10,
        }
    }
}

impl BudgetConfig {
    pub fn per_target(&self) -> u64 {
        u64::from(self.n_init) + u64::from(self.n_refine)
    }

    /// `(1 + max_lemmas + 1) * (n_init + n_refine)`: direct proof, one round
    /// of lemmas, synthesis.
    pub fn single_round_ceiling(&self) -> u64 {
        (2 + u64::from(self.max_lemmas)) * self.per_target()
    }

    /// Upper bound on prover samples for a whole problem at depth limit 1,
    /// allowing every restart `L` permits.
    pub fn problem_ceiling(&self) -> u64 {
        let rounds = u64::from(self.lemma_attempt_limit).div_ceil(u64::from(self.max_lemmas.max(1)));
        (2 + u64::from(self.max_lemmas) * rounds) * self.per_target()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_init == 0 {
            return Err("n_init must be positive".into());
        }
        if self.max_lemmas == 0 {
            return Err("max_lemmas must be positive".into());
        }
        if self.lemma_attempt_limit == 0 {
            return Err("lemma_attempt_limit must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub budget: BudgetConfig,
    pub sampling: SamplingConfig,
    /// Project header used unless a problem overrides it.
    pub header: String,
    pub check_timeout_secs: u64,
    /// Refine from the best draft so far instead of the latest one.
    pub keep_best_draft: bool,
    /// Reject candidates whose target declaration differs from the given
    /// statement.
    pub require_exact_statement: bool,
    /// When false, every duration in records and events is zero so that
    /// scripted runs are byte-for-byte reproducible.
    pub record_timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            budget: BudgetConfig::default(),
            sampling: SamplingConfig::default(),
            header: DEFAULT_HEADER.to_string(),
            check_timeout_secs: 300,
            keep_best_draft: false,
            require_exact_statement: true,
            record_timings: true,
        }
    }
}

impl RunConfig {
    pub fn check_timeout(&self) -> Duration {
        Duration::from_secs(self.check_timeout_secs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Valid,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

/// A benchmark problem ready to run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemStatement {
    /// Sanitized, run-unique name; `formal_statement` declares it.
    pub name: String,
    pub original_name: String,
    /// Lean theorem ending in `:= by sorry`.
    pub formal_statement: String,
    pub split: Split,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub header_override: Option<String>,
}

impl ProblemStatement {
    pub fn reference(&self) -> ProblemRef {
        ProblemRef {
            name: self.name.clone(),
            original_name: self.original_name.clone(),
            split: self.split,
            category: self.category.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemRef {
    pub name: String,
    pub original_name: String,
    pub split: Split,
    pub category: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofOutcome {
    pub solved: bool,
    /// The verified proof of the target (context lemmas excluded).
    pub proof_source: Option<String>,
    /// Prover samples spent on the target.
    pub attempts_used: u32,
    /// Fewest errors over the target's attempts.
    pub best_error_count: Option<ErrorRank>,
}

/// One prover sample and what became of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptRecord {
    /// 0-based, per problem.
    pub index: u32,
    pub target: String,
    pub stage: Stage,
    /// 1-based position within the stage.
    pub step: u32,
    /// Model call that produced the informal guidance, if any.
    pub informal_call: Option<u64>,
    pub prover_call: u64,
    /// Attempt this one refines.
    pub refines: Option<u32>,
    pub extracted: Option<ExtractedProof>,
    /// Unit handed to Lean; absent when the attempt failed before checking.
    pub unit: Option<SourceUnit>,
    pub report: VerificationReport,
    pub rank: ErrorRank,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum LemmaStatus {
    StatementInvalid,
    Unproven,
    Proven { proof_source: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormalLemma {
    pub lemma_id: String,
    /// Lean name of the lemma.
    pub name: String,
    pub informal: InformalLemma,
    /// Statement ending in a `sorry` body; set once it passed a statement check.
    pub statement_source: Option<String>,
    pub depth: u32,
    /// Generation round within its decomposition, 1-based.
    pub round: u32,
    pub statement_checks: u32,
    pub status: LemmaStatus,
    pub outcome: Option<ProofOutcome>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: Stage,
    pub target: String,
    pub prover_samples: u64,
    pub informal_calls: u64,
    pub autoformalizer_calls: u64,
    pub verifier_checks: u64,
    pub solved: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunTotals {
    pub prover_samples: u64,
    pub informal_calls: u64,
    pub autoformalizer_calls: u64,
    /// Includes the problem's own statement check.
    pub verifier_checks: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    #[serde(with = "duration_ms", rename = "wall_time_ms")]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemStatus {
    Solved,
    Failed,
    /// The given statement did not pass its statement check.
    Malformed,
    /// Stopped by a configuration or script error.
    Aborted,
}

/// Where the problem was solved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolvedIn {
    pub stage: Stage,
    pub step: u32,
    /// Prover samples the problem had consumed when it was solved.
    pub prover_samples: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem: ProblemRef,
    pub status: ProblemStatus,
    /// Outcome of the last proof target of the problem; `attempts_used`
    /// counts every prover sample of the problem.
    pub outcome: ProofOutcome,
    pub solved_in: Option<SolvedIn>,
    pub statement_check: Option<VerificationReport>,
    pub stages: Vec<StageSummary>,
    /// Left out of the ledger's summary record; attempts have their own events.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attempts: Vec<AttemptRecord>,
    pub lemmas: Vec<FormalLemma>,
    pub totals: RunTotals,
    /// Complete verified unit, ready to be checked again.
    pub final_unit: Option<SourceUnit>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn solved(&self) -> bool {
        self.status == ProblemStatus::Solved
    }

    pub fn without_attempts(&self) -> RunRecord {
        RunRecord {
            attempts: Vec::new(),
            ..self.clone()
        }
    }
}
