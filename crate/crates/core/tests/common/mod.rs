#![allow(dead_code)]

use std::sync::Arc;

use prover_agent::extraction::{render_informal_lemmas, InformalLemma, SanitizeConfig};
use prover_agent::gateway::{Gateway, GatewayConfig, Matcher, ModelRole, Script, ScriptedBackend};
use prover_agent::harness::parse_problems;
use prover_agent::orchestrator::{Agent, Event, ModelCallEvent, VecSink};
use prover_agent::verifier::{DirectiveVerifier, SourceUnit};
use prover_agent::orchestrator::ProblemStatement;
use prover_agent::{BudgetConfig, RunConfig, RunRecord};

pub const FACTORIAL: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/factorial_induction");

pub fn fixture(rel: &str) -> String {
    let path = format!("{FACTORIAL}/{rel}");
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

/// Loads one problem through the dataset path so names get sanitized.
pub fn problem_named(name: &str, statement: &str) -> ProblemStatement {
    let line = serde_json::json!({
        "name": name,
        "formal_statement": statement,
        "split": "test",
        "category": "synthetic",
    });
    parse_problems(&line.to_string(), &SanitizeConfig::default()).unwrap().remove(0)
}

pub fn problem(name: &str) -> ProblemStatement {
    problem_named(name, &statement(name))
}

pub fn statement(name: &str) -> String {
    format!("theorem {name} (n : ℕ) (h : 2 ≤ n) : n ^ 2 ≥ 4 := by sorry")
}

pub fn lean(code: &str) -> String {
    format!("```lean4\n{code}\n```")
}

fn body(statement: &str) -> &str {
    statement.trim_end().strip_suffix("sorry").expect("statement ends in sorry")
}

/// Prover answer that checks.
pub fn proves(statement: &str) -> String {
    lean(&format!("{}\n  nlinarith [h]", body(statement)))
}

/// Prover answer that fails with `errors` error diagnostics.
pub fn fails(statement: &str, errors: usize) -> String {
    let mut code = body(statement).to_string();
    for i in 0..errors {
        code.push_str(&format!("\n  nlinarith [h] -- @error: linarith failed (goal {i})"));
    }
    if errors == 0 {
        code.push_str("\n  sorry");
    }
    lean(&code)
}

/// Prover answer whose check runs out of time.
pub fn times_out(statement: &str) -> String {
    lean(&format!("{}\n  -- @timeout\n  decide", body(statement)))
}

pub fn informal_lemmas(lemmas: &[(&str, &str)]) -> String {
    let ls: Vec<InformalLemma> = lemmas
        .iter()
        .enumerate()
        .map(|(i, (name, conclusion))| InformalLemma {
            ordinal: i as u32 + 1,
            name: name.to_string(),
            assumptions: vec!["n is a natural number and n ≥ 2".into()],
            conclusion: conclusion.to_string(),
        })
        .collect();
    render_informal_lemmas(&ls)
}

/// Autoformalizer answer declaring `name`.
pub fn lemma_statement(name: &str) -> String {
    lean(&format!("theorem {name} (n : ℕ) (hn : 2 ≤ n) : n ≤ n ^ 2 := by sorry"))
}

pub fn quiet(n_init: u32, n_refine: u32) -> RunConfig {
    RunConfig {
        budget: BudgetConfig { n_init, n_refine, ..BudgetConfig::default() },
        record_timings: false,
        ..RunConfig::default()
    }
}

/// Informal answers that never propose lemmas.
pub fn base_script() -> Script {
    let mut s = Script::new();
    s.set_default(ModelRole::InformalReasoner, "Expand the square and compare.");
    s
}

pub struct Run {
    pub record: RunRecord,
    pub events: Vec<Event>,
    pub checked: Vec<SourceUnit>,
    pub unused_prover_entries: usize,
}

impl Run {
    pub fn calls(&self) -> Vec<&ModelCallEvent> {
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::ModelCall(c) => Some(c.as_ref()),
                _ => None,
            })
            .collect()
    }

    pub fn prover_prompts(&self) -> Vec<&str> {
        self.calls()
            .into_iter()
            .filter(|c| c.role == ModelRole::FormalProver)
            .map(|c| c.prompt.as_str())
            .collect()
    }
}

pub fn run(problem: &ProblemStatement, script: Script, config: &RunConfig) -> Run {
    let backend = Arc::new(ScriptedBackend::new(script));
    let gateway = Gateway::new(backend.clone(), GatewayConfig::default());
    let verifier = DirectiveVerifier::new();
    let sink = VecSink::default();
    let record = Agent::new(&gateway, &verifier, config, &sink).run_problem(problem);
    Run {
        record,
        events: sink.events(),
        checked: verifier.checked_units(),
        unused_prover_entries: backend.remaining(ModelRole::FormalProver),
    }
}

pub fn contains(s: &str) -> Matcher {
    Matcher::Contains(s.to_string())
}

pub const DIAGNOSTICS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/diagnostics");

/// Raw toolchain outputs with their hand-labelled diagnostics, by stem.
pub fn diagnostics_corpus() -> Vec<(String, String, Vec<prover_agent::Diagnostic>)> {
    let mut stems: Vec<String> = std::fs::read_dir(DIAGNOSTICS)
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().to_str()?.strip_suffix(".out").map(String::from))
        .collect();
    stems.sort();
    stems
        .into_iter()
        .map(|stem| {
            let raw = std::fs::read_to_string(format!("{DIAGNOSTICS}/{stem}.out")).unwrap();
            let labels = std::fs::read_to_string(format!("{DIAGNOSTICS}/{stem}.json")).unwrap();
            (stem, raw, serde_json::from_str(&labels).unwrap())
        })
        .collect()
}

/// `theorem {name} (n : ℕ) (hn : 2 ≤ n) : n ≤ n ^ 2 := by sorry`
pub fn lemma_source(name: &str) -> String {
    format!("theorem {name} (n : ℕ) (hn : 2 ≤ n) : n ≤ n ^ 2 := by sorry")
}

/// Shapes of scripted problem runs used by the benchmark-level suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    DirectSuccess,
    RefineSuccess,
    PartialLemmas,
    LemmaRestart,
    Synthesis,
    TotalFailure,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::DirectSuccess,
        Scenario::RefineSuccess,
        Scenario::PartialLemmas,
        Scenario::LemmaRestart,
        Scenario::Synthesis,
        Scenario::TotalFailure,
    ];

    pub fn solvable(self) -> bool {
        self != Scenario::TotalFailure
    }

    /// Script for a problem with statement `st`. Lemma names are prefixed
    /// with `tag` so scripts of different problems never collide.
    pub fn script(self, st: &str, tag: &str) -> Script {
        let mut s = base_script();
        let l = |suffix: &str| format!("{tag}_{suffix}");
        let prove_lemma = |s: &mut Script, name: &str| {
            s.push(ModelRole::FormalProver, contains(&format!("```lean4\ntheorem {name}")), proves(&lemma_source(name)));
        };
        match self {
            Scenario::DirectSuccess => {
                s.set_default(ModelRole::FormalProver, proves(st));
            }
            Scenario::RefineSuccess => {
                s.push(ModelRole::FormalProver, contains("Previous attempt:"), proves(st));
                s.set_default(ModelRole::FormalProver, fails(st, 2));
            }
            Scenario::PartialLemmas => {
                let names = [l("a"), l("b"), l("c")];
                let lemmas: Vec<(&str, &str)> = names.iter().map(|n| (n.as_str(), "n ≤ n^2")).collect();
                s.push(ModelRole::InformalReasoner, contains("auxiliary lemmas"), informal_lemmas(&lemmas));
                for n in &names {
                    s.push(ModelRole::Autoformalizer, Matcher::Any, lemma_statement(n));
                }
                prove_lemma(&mut s, &names[0]);
                prove_lemma(&mut s, &names[2]);
                s.push(ModelRole::FormalProver, contains("already proven"), proves(st));
                s.set_default(ModelRole::FormalProver, fails(st, 1));
            }
            Scenario::LemmaRestart => {
                let first = [l("r1a"), l("r1b")];
                let lemmas: Vec<(&str, &str)> = first.iter().map(|n| (n.as_str(), "n ≤ n^2")).collect();
                s.push(ModelRole::InformalReasoner, contains("Do not reuse these lemma names: none"), informal_lemmas(&lemmas));
                s.push(ModelRole::InformalReasoner, contains("auxiliary lemmas"), informal_lemmas(&[(&l("r2a"), "n ≤ n^2")]));
                s.set_default(ModelRole::Autoformalizer, lemma_statement("candidate"));
                prove_lemma(&mut s, &l("r2a"));
                s.push(ModelRole::FormalProver, contains("already proven"), proves(st));
                s.set_default(ModelRole::FormalProver, fails(st, 1));
            }
            Scenario::Synthesis => {
                s.push(ModelRole::InformalReasoner, contains("auxiliary lemmas"), informal_lemmas(&[(&l("s"), "n ≤ n^2")]));
                s.push(ModelRole::Autoformalizer, Matcher::Any, lemma_statement(&l("s")));
                prove_lemma(&mut s, &l("s"));
                // the first synthesis draft fails and its refinement checks
                let draft = lean(&format!("{}\n  nlinarith [h] -- @error: synthesis draft rejected", body(st)));
                s.push(ModelRole::FormalProver, contains("already proven"), draft);
                s.push(ModelRole::FormalProver, contains("synthesis draft rejected"), proves(st));
                s.set_default(ModelRole::FormalProver, fails(st, 3));
            }
            Scenario::TotalFailure => {
                s.set_default(ModelRole::FormalProver, fails(st, 1));
            }
        }
        s
    }
}

/// One JSON-lines dataset record with the standard test statement.
pub fn dataset_line(name: &str, split: &str, category: &str) -> String {
    serde_json::json!({
        "name": name,
        "formal_statement": statement(name),
        "split": split,
        "category": category,
    })
    .to_string()
}
