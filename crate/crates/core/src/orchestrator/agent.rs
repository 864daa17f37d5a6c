//! Per-problem execution of the proving loop.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use super::events::{Event, EventSink, ModelCallEvent, StageStatus};
use super::seed::select_seed;
use super::signature::same_statement;
use super::{
    AttemptRecord, FormalLemma, LemmaStatus, ProblemStatement, ProblemStatus, ProofOutcome, RunConfig,
    RunRecord, RunTotals, SolvedIn, Stage, StageSummary,
};
use crate::extraction::{
    declared_names, extract_lean_blocks, parse_informal_lemmas, rename_declaration, select_candidate,
    to_identifier, InformalLemma,
};
use crate::gateway::{CompletionRequest, Gateway, GatewayError, ModelRole, Sampling, TemplateId};
use crate::verifier::{
    compose_unit, CheckOrigin, ErrorRank, SourceUnit, VerificationReport, Verifier, VerifierError,
};

/// Runs problems against one gateway and one verifier.
pub struct Agent<'a> {
    gateway: &'a Gateway,
    verifier: &'a dyn Verifier,
    config: &'a RunConfig,
    sink: &'a dyn EventSink,
}

impl<'a> Agent<'a> {
    pub fn new(gateway: &'a Gateway, verifier: &'a dyn Verifier, config: &'a RunConfig, sink: &'a dyn EventSink) -> Self {
        Self { gateway, verifier, config, sink }
    }

    /// Direct proof, then lemmas and synthesis if needed. Never panics on
    /// model or Lean trouble; fatal errors end the run as `Aborted`.
    pub fn run_problem(&self, problem: &ProblemStatement) -> RunRecord {
        ProblemRun::new(self, problem).execute()
    }
}

/// Renders a report as refinement feedback. Positions are relative to the
/// candidate proof, which starts at `target_line` of the checked file.
pub fn feedback_text(report: &VerificationReport, target_line: Option<u32>) -> String {
    let mut lines = Vec::new();
    for d in &report.diagnostics {
        let line = match target_line {
            _ if d.file == "<agent>" => format!("- {}: {}", d.severity, d.message),
            Some(tl) if d.line >= tl => {
                format!("- line {}, column {}: {}: {}", d.line - tl + 1, d.col, d.severity, d.message)
            }
            _ => format!("- before the proof (file line {}, column {}): {}: {}", d.line, d.col, d.severity, d.message),
        };
        lines.push(line);
    }
    if report.timed_out {
        lines.push("- Lean did not finish within the time limit.".to_string());
    }
    if report.uses_sorry {
        lines.push("- The proof uses `sorry`, which is not accepted.".to_string());
    }
    if lines.is_empty() {
        lines.push("- Lean rejected the proof without a diagnostic.".to_string());
    }
    lines.join("\n")
}

#[derive(Debug)]
enum Abort {
    Config(String),
    Gateway(GatewayError),
    Verifier(VerifierError),
}

impl std::fmt::Display for Abort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Abort::Config(m) => write!(f, "configuration error: {m}"),
            Abort::Gateway(e) => write!(f, "model gateway: {e}"),
            Abort::Verifier(e) => write!(f, "verifier: {e}"),
        }
    }
}

/// A theorem being proven: the problem itself or one of its lemmas, either
/// directly or by synthesis from proven lemmas.
#[derive(Debug, Clone)]
struct Target {
    name: String,
    statement: String,
    lemma: Option<String>,
    synth: bool,
    /// Verified lemma sources placed before the proof.
    context: Vec<String>,
}

impl Target {
    fn stage(&self, refine: bool) -> Stage {
        match (&self.lemma, self.synth, refine) {
            (None, false, false) => Stage::DirectInit,
            (None, false, true) => Stage::DirectRefine,
            (None, true, false) => Stage::SynthInit,
            (None, true, true) => Stage::SynthRefine,
            (Some(l), false, false) => Stage::LemmaInit(l.clone()),
            (Some(l), false, true) => Stage::LemmaRefine(l.clone()),
            (Some(l), true, false) => Stage::LemmaSynthInit(l.clone()),
            (Some(l), true, true) => Stage::LemmaSynthRefine(l.clone()),
        }
    }

    fn context_text(&self) -> String {
        if self.context.is_empty() {
            "-- no lemmas were proven".to_string()
        } else {
            self.context.join("\n\n")
        }
    }

    /// Statement as shown to the prover during refinement.
    fn refine_statement(&self) -> String {
        if self.context.is_empty() {
            self.statement.clone()
        } else {
            format!("{}\n\n{}", self.context.join("\n\n"), self.statement)
        }
    }
}

type CallResult = Result<(u64, Result<String, String>), Abort>;

struct ProblemRun<'r, 'a> {
    agent: &'r Agent<'a>,
    problem: &'r ProblemStatement,
    header: String,
    started: Instant,
    responses: Vec<Option<String>>,
    attempts: Vec<AttemptRecord>,
    lemmas: Vec<FormalLemma>,
    stages: Vec<StageSummary>,
    totals: RunTotals,
    used_names: BTreeSet<String>,
    lemma_counters: BTreeMap<Option<String>, u32>,
    solved_in: Option<SolvedIn>,
    statement_check: Option<VerificationReport>,
}

impl<'r, 'a> ProblemRun<'r, 'a> {
    fn new(agent: &'r Agent<'a>, problem: &'r ProblemStatement) -> Self {
        let header = problem.header_override.clone().unwrap_or_else(|| agent.config.header.clone());
        Self {
            agent,
            problem,
            header,
            started: Instant::now(),
            responses: Vec::new(),
            attempts: Vec::new(),
            lemmas: Vec::new(),
            stages: Vec::new(),
            totals: RunTotals::default(),
            used_names: BTreeSet::from([problem.name.clone()]),
            lemma_counters: BTreeMap::new(),
            solved_in: None,
            statement_check: None,
        }
    }

    fn cfg(&self) -> &'a RunConfig {
        self.agent.config
    }

    fn emit(&self, event: Event) {
        self.agent.sink.emit(&event);
    }

    fn execute(mut self) -> RunRecord {
        self.emit(Event::ProblemStarted { problem: self.problem.reference() });
        let (status, outcome, error) = match self.pipeline() {
            Ok((status, outcome)) => (status, outcome, None),
            Err(abort) => {
                tracing::error!(problem = %self.problem.name, error = %abort, "problem aborted");
                (ProblemStatus::Aborted, self.fallback_outcome(), Some(abort.to_string()))
            }
        };
        self.finish(status, outcome, error)
    }

    fn pipeline(&mut self) -> Result<(ProblemStatus, ProofOutcome), Abort> {
        self.cfg().budget.validate().map_err(Abort::Config)?;
        if let Err(reason) = self.check_problem_statement()? {
            tracing::warn!(problem = %self.problem.name, %reason, "malformed problem statement");
            return Ok((ProblemStatus::Malformed, self.fallback_outcome()));
        }

        let direct = Target {
            name: self.problem.name.clone(),
            statement: self.problem.formal_statement.clone(),
            lemma: None,
            synth: false,
            context: Vec::new(),
        };
        let outcome = self.prove(&direct)?;
        if outcome.solved {
            return Ok((ProblemStatus::Solved, outcome));
        }

        let proven = if self.cfg().budget.depth_limit >= 1 {
            self.lemma_round(&direct, 1)?
        } else {
            Vec::new()
        };
        let synth = Target { synth: true, context: proven, ..direct };
        let outcome = self.prove(&synth)?;
        let status = if outcome.solved { ProblemStatus::Solved } else { ProblemStatus::Failed };
        Ok((status, outcome))
    }

    fn check_problem_statement(&mut self) -> Result<Result<(), String>, Abort> {
        let names = declared_names(&self.problem.formal_statement);
        if names != [self.problem.name.clone()] {
            return Ok(Err(format!("statement declares {names:?}, expected `{}`", self.problem.name)));
        }
        let unit = match compose_unit(&self.header, &self.problem.formal_statement, &[], CheckOrigin::StatementOnlyCheck) {
            Ok(u) => u,
            Err(e) => return Ok(Err(e.to_string())),
        };
        self.totals.verifier_checks += 1;
        let report = self.run_check(&unit)?;
        let ok = report.success;
        self.statement_check = Some(report);
        Ok(if ok { Ok(()) } else { Err("statement check failed".into()) })
    }

    fn fallback_outcome(&self) -> ProofOutcome {
        ProofOutcome {
            solved: false,
            proof_source: None,
            attempts_used: self.attempts.len() as u32,
            best_error_count: self.attempts.iter().map(|a| a.rank).min(),
        }
    }

    fn finish(self, status: ProblemStatus, mut outcome: ProofOutcome, error: Option<String>) -> RunRecord {
        let mut totals = self.totals;
        totals.wall_time = if self.cfg().record_timings { self.started.elapsed() } else { Duration::ZERO };
        outcome.attempts_used = self.attempts.len() as u32;
        let final_unit = if status == ProblemStatus::Solved {
            self.attempts.iter().rev().find(|a| a.report.success && a.stage.lemma().is_none()).and_then(|a| a.unit.clone())
        } else {
            None
        };
        let record = RunRecord {
            problem: self.problem.reference(),
            status,
            outcome,
            solved_in: self.solved_in,
            statement_check: self.statement_check,
            stages: self.stages,
            attempts: self.attempts,
            lemmas: self.lemmas,
            totals,
            final_unit,
            error,
        };
        self.agent.sink.emit(&Event::ProblemFinished { record: Box::new(record.without_attempts()) });
        record
    }

    // ---- stage bookkeeping ----

    fn stage_begin(&mut self, stage: &Stage, target: &str) {
        self.stages.push(StageSummary {
            stage: stage.clone(),
            target: target.to_string(),
            prover_samples: 0,
            informal_calls: 0,
            autoformalizer_calls: 0,
            verifier_checks: 0,
            solved: false,
        });
        self.emit(Event::Stage {
            problem: self.problem.name.clone(),
            stage: stage.clone(),
            target: target.to_string(),
            status: StageStatus::Started,
            solved: None,
        });
    }

    fn stage_end(&mut self, stage: &Stage, target: &str, solved: bool) {
        if let Some(s) = self.summary(stage) {
            s.solved = solved;
        }
        self.emit(Event::Stage {
            problem: self.problem.name.clone(),
            stage: stage.clone(),
            target: target.to_string(),
            status: StageStatus::Finished,
            solved: Some(solved),
        });
    }

    fn summary(&mut self, stage: &Stage) -> Option<&mut StageSummary> {
        self.stages.iter_mut().rev().find(|s| &s.stage == stage)
    }

    // ---- model and Lean access ----

    fn call(&mut self, stage: &Stage, role: ModelRole, template: TemplateId, prompt: String, temperature: f64) -> CallResult {
        let index = self.responses.len() as u64;
        let sampling = Sampling {
            temperature,
            max_tokens: self.cfg().sampling.max_tokens,
            seed: self.cfg().sampling.base_seed.map(|b| b.wrapping_add(index)),
        };
        let req = CompletionRequest { role, prompt, sampling };
        match role {
            ModelRole::InformalReasoner => self.totals.informal_calls += 1,
            ModelRole::FormalProver => self.totals.prover_samples += 1,
            ModelRole::Autoformalizer => self.totals.autoformalizer_calls += 1,
        }
        if let Some(s) = self.summary(stage) {
            match role {
                ModelRole::InformalReasoner => s.informal_calls += 1,
                ModelRole::FormalProver => s.prover_samples += 1,
                ModelRole::Autoformalizer => s.autoformalizer_calls += 1,
            }
        }

        let result = self.agent.gateway.complete(&req);
        let mut event = ModelCallEvent {
            problem: self.problem.name.clone(),
            call_index: index,
            stage: stage.clone(),
            role,
            template,
            template_sha256: template.sha256(),
            prompt: req.prompt.clone(),
            response: None,
            error: None,
            usage: Default::default(),
            latency_ms: 0,
            truncated: false,
            request_body: serde_json::Value::Null,
            response_body: serde_json::Value::Null,
        };
        let outcome = match result {
            Ok(resp) => {
                self.totals.prompt_tokens += resp.usage.prompt_tokens;
                self.totals.completion_tokens += resp.usage.completion_tokens;
                if self.cfg().record_timings {
                    event.latency_ms = resp.latency.as_millis() as u64;
                }
                event.usage = resp.usage;
                event.truncated = resp.truncated;
                event.response = Some(resp.text.clone());
                event.request_body = resp.request_body;
                event.response_body = resp.response_body;
                Ok(resp.text)
            }
            Err(e) => {
                event.error = Some(e.to_string());
                if e.is_fatal() {
                    self.responses.push(None);
                    self.emit(Event::ModelCall(Box::new(event)));
                    return Err(Abort::Gateway(e));
                }
                tracing::warn!(problem = %self.problem.name, %role, error = %e, "model call failed");
                Err(e.to_string())
            }
        };
        self.responses.push(outcome.as_ref().ok().cloned());
        self.emit(Event::ModelCall(Box::new(event)));
        Ok((index, outcome))
    }

    fn run_check(&self, unit: &SourceUnit) -> Result<VerificationReport, Abort> {
        match self.agent.verifier.check(unit, self.cfg().check_timeout()) {
            Ok(mut report) => {
                if !self.cfg().record_timings {
                    report.elapsed = Duration::ZERO;
                }
                Ok(report)
            }
            Err(VerifierError::Io(e)) => Ok(VerificationReport::synthetic_failure(format!("Lean could not be run: {e}"))),
            Err(e) => Err(Abort::Verifier(e)),
        }
    }

    fn check(&mut self, stage: &Stage, unit: &SourceUnit) -> Result<VerificationReport, Abort> {
        self.totals.verifier_checks += 1;
        if let Some(s) = self.summary(stage) {
            s.verifier_checks += 1;
        }
        self.run_check(unit)
    }

    // ---- proving ----

    fn prove(&mut self, target: &Target) -> Result<ProofOutcome, Abort> {
        let budget = self.cfg().budget;
        let stage = target.stage(false);
        self.stage_begin(&stage, &target.name);
        let mut tried = Vec::new();
        for step in 1..=budget.n_init {
            let idx = self.init_attempt(target, &stage, step)?;
            tried.push(idx);
            if self.attempts[idx].report.success {
                self.stage_end(&stage, &target.name, true);
                return Ok(self.solved(target, idx, tried.len()));
            }
        }
        self.stage_end(&stage, &target.name, false);

        let ranks: Vec<ErrorRank> = tried.iter().map(|&i| self.attempts[i].rank).collect();
        match select_seed(&ranks) {
            Some(seed) => self.iterative_refine(target, tried[seed], tried),
            None => Ok(self.unsolved(&tried)),
        }
    }

    fn iterative_refine(&mut self, target: &Target, seed: usize, mut tried: Vec<usize>) -> Result<ProofOutcome, Abort> {
        let budget = self.cfg().budget;
        if budget.n_refine == 0 {
            return Ok(self.unsolved(&tried));
        }
        let stage = target.stage(true);
        self.stage_begin(&stage, &target.name);
        let mut current = seed;
        let mut best = seed;
        for step in 1..=budget.n_refine {
            let idx = self.refine_attempt(target, &stage, step, current)?;
            tried.push(idx);
            if self.attempts[idx].report.success {
                self.stage_end(&stage, &target.name, true);
                return Ok(self.solved(target, idx, tried.len()));
            }
            if self.attempts[idx].rank < self.attempts[best].rank {
                best = idx;
            }
            current = if self.cfg().keep_best_draft { best } else { idx };
        }
        self.stage_end(&stage, &target.name, false);
        Ok(self.unsolved(&tried))
    }

    fn solved(&mut self, target: &Target, idx: usize, used: usize) -> ProofOutcome {
        let a = &self.attempts[idx];
        if target.lemma.is_none() {
            self.solved_in = Some(SolvedIn {
                stage: a.stage.clone(),
                step: a.step,
                prover_samples: self.totals.prover_samples,
            });
        }
        ProofOutcome {
            solved: true,
            proof_source: a.extracted.as_ref().map(|e| e.code.clone()),
            attempts_used: used as u32,
            best_error_count: Some(ErrorRank::Finite(0)),
        }
    }

    fn unsolved(&self, tried: &[usize]) -> ProofOutcome {
        ProofOutcome {
            solved: false,
            proof_source: None,
            attempts_used: tried.len() as u32,
            best_error_count: tried.iter().map(|&i| self.attempts[i].rank).min(),
        }
    }

    fn init_attempt(&mut self, target: &Target, stage: &Stage, step: u32) -> Result<usize, Abort> {
        let temperature = self.cfg().sampling.init_temperature;
        let (informal_call, prompt, template) = if target.synth {
            let prompt = TemplateId::SynthesizeWithLemmas
                .render(&[("lemmas", &target.context_text()), ("statement", &target.statement)])
                .map_err(Abort::Gateway)?;
            (None, prompt, TemplateId::SynthesizeWithLemmas)
        } else {
            let prompt = TemplateId::DirectInformalProof
                .render(&[("statement", &target.statement)])
                .map_err(Abort::Gateway)?;
            let (call, informal) =
                self.call(stage, ModelRole::InformalReasoner, TemplateId::DirectInformalProof, prompt, temperature)?;
            let informal = informal.unwrap_or_else(|e| {
                format!("(no informal proof is available: {e})")
            });
            let prompt = TemplateId::FormalizeWithInformalGuidance
                .render(&[("statement", &target.statement), ("informal_proof", &informal)])
                .map_err(Abort::Gateway)?;
            (Some(call), prompt, TemplateId::FormalizeWithInformalGuidance)
        };
        let (prover_call, output) = self.call(stage, ModelRole::FormalProver, template, prompt, temperature)?;
        self.evaluate(target, stage, step, informal_call, prover_call, None, output)
    }

    fn refine_attempt(&mut self, target: &Target, stage: &Stage, step: u32, previous: usize) -> Result<usize, Abort> {
        let prev = &self.attempts[previous];
        let previous_proof = match &prev.extracted {
            Some(e) => e.code.clone(),
            None => self.responses[prev.prover_call as usize]
                .clone()
                .filter(|t| !t.trim().is_empty())
                .unwrap_or_else(|| "-- the previous attempt produced no output".to_string()),
        };
        let diagnostics = feedback_text(&prev.report, prev.unit.as_ref().map(|u| u.target_line));
        let prev_index = prev.index;
        let prompt = TemplateId::RefineWithDiagnostics
            .render(&[
                ("statement", &target.refine_statement()),
                ("previous_proof", &previous_proof),
                ("diagnostics", &diagnostics),
            ])
            .map_err(Abort::Gateway)?;
        let temperature = self.cfg().sampling.refine_temperature;
        let (prover_call, output) =
            self.call(stage, ModelRole::FormalProver, TemplateId::RefineWithDiagnostics, prompt, temperature)?;
        self.evaluate(target, stage, step, None, prover_call, Some(prev_index), output)
    }

    #[allow(clippy::too_many_arguments)]
    fn evaluate(
        &mut self,
        target: &Target,
        stage: &Stage,
        step: u32,
        informal_call: Option<u64>,
        prover_call: u64,
        refines: Option<u32>,
        output: Result<String, String>,
    ) -> Result<usize, Abort> {
        let mut extracted = None;
        let mut unit = None;
        let report = match output {
            Err(e) => VerificationReport::synthetic_failure(format!("prover call failed: {e}")),
            Ok(text) => match select_candidate(&extract_lean_blocks(&text), &target.name) {
                Err(_) => VerificationReport::synthetic_failure("no Lean code block in the prover output"),
                Ok(candidate) => {
                    let code = candidate.code.clone();
                    let declares = candidate.declares_target;
                    extracted = Some(candidate);
                    if !declares {
                        VerificationReport::synthetic_failure(format!("the code does not declare `{}`", target.name))
                    } else if self.cfg().require_exact_statement && !same_statement(&target.statement, &code, &target.name) {
                        VerificationReport::synthetic_failure(format!(
                            "the declaration of `{}` differs from the given statement",
                            target.name
                        ))
                    } else {
                        match compose_unit(&self.header, &code, &target.context, CheckOrigin::ProofCheck) {
                            Err(e) => VerificationReport::synthetic_failure(e.to_string()),
                            Ok(u) => {
                                let report = self.check(stage, &u)?;
                                unit = Some(u);
                                report
                            }
                        }
                    }
                }
            },
        };
        let record = AttemptRecord {
            index: self.attempts.len() as u32,
            target: target.name.clone(),
            stage: stage.clone(),
            step,
            informal_call,
            prover_call,
            refines,
            extracted,
            unit,
            rank: report.rank(),
            report,
        };
        self.emit(Event::Attempt { problem: self.problem.name.clone(), attempt: Box::new(record.clone()) });
        self.attempts.push(record);
        Ok(self.attempts.len() - 1)
    }

    // ---- lemmas ----

    /// Generates, formalizes and proves lemmas for `parent` until one round
    /// yields a proven lemma or `L` lemmas have been attempted. Returns the
    /// verified lemma sources.
    fn lemma_round(&mut self, parent: &Target, depth: u32) -> Result<Vec<String>, Abort> {
        let budget = self.cfg().budget;
        let limit = budget.lemma_attempt_limit;
        let mut attempted = 0u32;
        let mut round = 0u32;
        let mut excluded = Vec::new();
        let mut proven = Vec::new();
        while attempted < limit {
            round += 1;
            let cap = budget.max_lemmas.min(limit - attempted);
            let formal = self.generate_and_formalize(parent, depth, round, cap, &mut excluded)?;
            if formal.is_empty() {
                // an empty round still counts against L so restarts terminate
                attempted += 1;
                continue;
            }
            for li in formal {
                attempted += 1;
                if let Some(source) = self.prove_lemma(li, depth)? {
                    proven.push(source);
                }
            }
            if !proven.is_empty() {
                break;
            }
        }
        Ok(proven)
    }

    fn next_lemma_id(&mut self, parent: &Option<String>) -> String {
        let n = self.lemma_counters.entry(parent.clone()).or_insert(0);
        *n += 1;
        match parent {
            None => format!("L{n}"),
            Some(p) => format!("{p}.{n}"),
        }
    }

    fn fresh_name(&mut self, informal_name: &str) -> String {
        let base = to_identifier(informal_name);
        let mut name = base.clone();
        let mut k = 2;
        while self.used_names.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        self.used_names.insert(name.clone());
        name
    }

    fn generate_and_formalize(
        &mut self,
        parent: &Target,
        depth: u32,
        round: u32,
        cap: u32,
        excluded: &mut Vec<String>,
    ) -> Result<Vec<usize>, Abort> {
        let stage = Stage::LemmaGeneration(parent.lemma.clone());
        self.stage_begin(&stage, &parent.name);
        let excluded_text = if excluded.is_empty() { "none".to_string() } else { excluded.join(", ") };
        let prompt = TemplateId::GenerateLemmas
            .render(&[
                ("statement", &parent.statement),
                ("max_lemmas", &cap.to_string()),
                ("excluded", &excluded_text),
            ])
            .map_err(Abort::Gateway)?;
        let temperature = self.cfg().sampling.init_temperature;
        let (_, text) = self.call(&stage, ModelRole::InformalReasoner, TemplateId::GenerateLemmas, prompt, temperature)?;
        let informal = text.map(|t| parse_informal_lemmas(&t, cap as usize)).unwrap_or_default();
        if informal.is_empty() {
            tracing::info!(problem = %self.problem.name, round, "lemma generation produced no lemmas");
        }
        self.stage_end(&stage, &parent.name, !informal.is_empty());

        let mut valid = Vec::new();
        for lemma in informal {
            excluded.push(lemma.name.clone());
            let idx = self.formalize_lemma(parent, lemma, depth, round)?;
            if self.lemmas[idx].status != LemmaStatus::StatementInvalid {
                valid.push(idx);
            }
        }
        Ok(valid)
    }

    fn formalize_lemma(&mut self, parent: &Target, informal: InformalLemma, depth: u32, round: u32) -> Result<usize, Abort> {
        let lemma_id = self.next_lemma_id(&parent.lemma);
        let name = self.fresh_name(&informal.name);
        let stage = Stage::LemmaStatement(lemma_id.clone());
        self.stage_begin(&stage, &name);
        let mut lemma = FormalLemma {
            lemma_id,
            name: name.clone(),
            informal,
            statement_source: None,
            depth,
            round,
            statement_checks: 0,
            status: LemmaStatus::StatementInvalid,
            outcome: None,
        };
        let prompt = TemplateId::AutoformalizeStatement
            .render(&[
                ("lemma_name", &name),
                ("assumptions", &lemma.informal.assumptions_text()),
                ("conclusion", &lemma.informal.conclusion),
            ])
            .map_err(Abort::Gateway)?;
        let temperature = self.cfg().sampling.init_temperature;
        for _ in 0..=self.cfg().budget.statement_formalize_retries {
            let (_, text) =
                self.call(&stage, ModelRole::Autoformalizer, TemplateId::AutoformalizeStatement, prompt.clone(), temperature)?;
            let Some(code) = text.ok().and_then(|t| self.statement_candidate(&t, &name)) else { continue };
            let Ok(unit) = compose_unit(&self.header, &code, &[], CheckOrigin::StatementOnlyCheck) else { continue };
            lemma.statement_checks += 1;
            if self.check(&stage, &unit)?.success {
                lemma.statement_source = Some(code);
                lemma.status = LemmaStatus::Unproven;
                break;
            }
        }
        self.stage_end(&stage, &name, lemma.status == LemmaStatus::Unproven);
        self.emit(Event::Lemma { problem: self.problem.name.clone(), lemma: Box::new(lemma.clone()) });
        self.lemmas.push(lemma);
        Ok(self.lemmas.len() - 1)
    }

    /// A single `sorry`-bodied declaration from autoformalizer output,
    /// renamed to `name` if the model chose another name.
    fn statement_candidate(&self, text: &str, name: &str) -> Option<String> {
        let candidate = select_candidate(&extract_lean_blocks(text), name).ok()?;
        let code = candidate.code.trim_end().to_string();
        if !code.ends_with("sorry") {
            return None;
        }
        match declared_names(&code).as_slice() {
            [n] if n == name => Some(code),
            [other] if !self.used_names.contains(other) => rename_declaration(&code, other, name),
            _ => None,
        }
    }

    fn prove_lemma(&mut self, idx: usize, depth: u32) -> Result<Option<String>, Abort> {
        let lemma = &self.lemmas[idx];
        let target = Target {
            name: lemma.name.clone(),
            statement: lemma.statement_source.clone().unwrap_or_default(),
            lemma: Some(lemma.lemma_id.clone()),
            synth: false,
            context: Vec::new(),
        };
        let mut outcome = self.prove(&target)?;
        let mut source = outcome.proof_source.clone().filter(|_| outcome.solved);

        if source.is_none() && depth < self.cfg().budget.depth_limit {
            let sub = self.lemma_round(&target, depth + 1)?;
            if !sub.is_empty() {
                let synth = Target { synth: true, context: sub.clone(), ..target };
                outcome = self.prove(&synth)?;
                if let (true, Some(proof)) = (outcome.solved, &outcome.proof_source) {
                    source = Some(format!("{}\n\n{}", sub.join("\n\n"), proof));
                }
            }
        }

        let lemma = &mut self.lemmas[idx];
        if let Some(src) = &source {
            lemma.status = LemmaStatus::Proven { proof_source: src.clone() };
        }
        lemma.outcome = Some(outcome);
        let event = Event::Lemma { problem: self.problem.name.clone(), lemma: Box::new(lemma.clone()) };
        self.emit(event);
        Ok(source)
    }
}
