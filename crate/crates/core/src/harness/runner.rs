//! Benchmark execution with problem-level parallelism and resumption.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::ledger::{Ledger, LedgerContents, LedgerError};
use super::report::Report;
use crate::gateway::{Gateway, GatewayConfig, ModelRole, Script, ScriptedBackend};
use crate::orchestrator::{Agent, Event, EventSink, ProblemStatement, ProblemStatus, RunConfig, RunRecord};
use crate::verifier::Verifier;

/// Supplies the gateway used for one problem.
pub type GatewayFactory<'a> = dyn Fn(&ProblemStatement) -> Arc<Gateway> + Send + Sync + 'a;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("ledger write failed: {0}")]
    LedgerWrite(std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOutcome {
    pub report: Report,
    /// Records of every problem in input order, including resumed ones.
    pub records: Vec<RunRecord>,
    /// Problems skipped because the ledger already had their result.
    pub skipped: Vec<String>,
}

/// Problems the ledger already holds a final record for. Aborted runs are
/// retried.
pub fn completed_problems(contents: &LedgerContents) -> BTreeMap<String, RunRecord> {
    contents
        .records()
        .into_iter()
        .filter(|r| r.status != ProblemStatus::Aborted)
        .map(|r| (r.problem.name.clone(), r))
        .collect()
}

/// Runs every problem not yet finished in `ledger`, `parallelism` at a time.
pub fn run_benchmark(
    problems: &[ProblemStatement],
    config: &RunConfig,
    parallelism: usize,
    gateways: &GatewayFactory<'_>,
    verifier: &dyn Verifier,
    ledger: &Ledger,
    existing: &LedgerContents,
) -> Result<BenchmarkOutcome, HarnessError> {
    let done = completed_problems(existing);
    let pending: Vec<usize> = (0..problems.len()).filter(|&i| !done.contains_key(&problems[i].name)).collect();
    let skipped: Vec<String> = problems.iter().filter(|p| done.contains_key(&p.name)).map(|p| p.name.clone()).collect();
    if !skipped.is_empty() {
        tracing::info!(count = skipped.len(), "resuming: skipping finished problems");
    }

    let results: Mutex<BTreeMap<usize, RunRecord>> = Mutex::new(BTreeMap::new());
    let next = AtomicUsize::new(0);
    let workers = parallelism.max(1).min(pending.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let slot = next.fetch_add(1, Ordering::SeqCst);
                let Some(&i) = pending.get(slot) else { break };
                let problem = &problems[i];
                let gateway = gateways(problem);
                let agent = Agent::new(&gateway, verifier, config, ledger as &dyn EventSink);
                tracing::info!(problem = %problem.name, "starting");
                let record = agent.run_problem(problem);
                tracing::info!(problem = %problem.name, status = ?record.status, samples = record.totals.prover_samples, "finished");
                results.lock().unwrap_or_else(|e| e.into_inner()).insert(i, record);
            });
        }
    });
    if let Some(e) = ledger.take_error() {
        return Err(HarnessError::LedgerWrite(e));
    }

    let mut fresh = results.into_inner().unwrap_or_else(|e| e.into_inner());
    let records: Vec<RunRecord> = (0..problems.len())
        .filter_map(|i| fresh.remove(&i).or_else(|| done.get(&problems[i].name).cloned()))
        .collect();
    Ok(BenchmarkOutcome {
        report: Report::from_records(&records, &config.budget),
        records,
        skipped,
    })
}

/// Scripts for a scripted benchmark: one per problem, with a fallback.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScriptBook {
    pub problems: BTreeMap<String, Script>,
    pub fallback: Option<Script>,
}

impl ScriptBook {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Rebuilds the model side of a recorded run: every recorded answer,
    /// keyed by prompt hash, per problem.
    pub fn from_events(events: &[Event]) -> Self {
        let mut per_problem: BTreeMap<String, Vec<(ModelRole, String, String)>> = BTreeMap::new();
        let mut restarted = BTreeSet::new();
        for event in events {
            match event {
                // a rerun after an abort supersedes the earlier partial run
                Event::ProblemStarted { problem } if !restarted.insert(problem.name.clone()) => {
                    per_problem.remove(&problem.name);
                }
                Event::ModelCall(call) => {
                    if let Some(response) = &call.response {
                        per_problem.entry(call.problem.clone()).or_default().push((
                            call.role,
                            call.prompt.clone(),
                            response.clone(),
                        ));
                    }
                }
                _ => {}
            }
        }
        let problems = per_problem
            .into_iter()
            .map(|(name, calls)| {
                let script = Script::from_exchanges(calls.iter().map(|(r, p, t)| (*r, p.as_str(), t.as_str())));
                (name, script)
            })
            .collect();
        Self { problems, fallback: None }
    }

    pub fn script_for(&self, problem: &str) -> Script {
        self.problems.get(problem).or(self.fallback.as_ref()).cloned().unwrap_or_default()
    }

    /// A factory handing each problem a fresh gateway over its own script.
    pub fn gateway_factory(self, config: GatewayConfig) -> impl Fn(&ProblemStatement) -> Arc<Gateway> + Send + Sync {
        move |p: &ProblemStatement| {
            let backend = Arc::new(ScriptedBackend::new(self.script_for(&p.name)));
            Arc::new(Gateway::new(backend, config.clone()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayResult {
    pub problem: String,
    pub reproduced: bool,
    pub detail: String,
}

/// Checks every recorded final proof again.
pub fn replay_final_proofs(records: &[RunRecord], verifier: &dyn Verifier, timeout: Duration) -> Vec<ReplayResult> {
    records
        .iter()
        .filter(|r| r.solved())
        .map(|r| {
            let problem = r.problem.name.clone();
            match &r.final_unit {
                None => ReplayResult { problem, reproduced: false, detail: "no final unit recorded".into() },
                Some(unit) => match verifier.check(unit, timeout) {
                    Ok(report) => ReplayResult {
                        problem,
                        reproduced: report.success,
                        detail: format!("{} error(s)", report.error_count()),
                    },
                    Err(e) => ReplayResult { problem, reproduced: false, detail: e.to_string() },
                },
            }
        })
        .collect()
}
