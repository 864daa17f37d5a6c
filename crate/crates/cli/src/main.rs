use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use prover_agent::gateway::{Gateway, HttpBackend, ModelRole};
use prover_agent::harness::{
    load_problems, read_ledger, render_report, replay_final_proofs, run_benchmark, Config, Ledger, Report,
    ScriptBook,
};
use prover_agent::verifier::{compose_unit, CheckOrigin, DirectiveVerifier, LeanVerifier, Verifier};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "prover-agent", version, about = "Lemma-guided Lean 4 theorem proving agent")]
struct Cli {
    /// TOML configuration; PROVER_AGENT_* variables override it.
    #[arg(long, global = true, env = "PROVER_AGENT_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the agent over a dataset, appending to (and resuming from) a ledger.
    Run {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        ledger: PathBuf,
        /// Answer model calls from a script file instead of HTTP endpoints.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Use the directive-driven stand-in for Lean.
        #[arg(long)]
        mock_lean: bool,
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Print pass rates rebuilt from a ledger.
    Report {
        #[arg(long)]
        ledger: PathBuf,
        /// Emit the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Check one Lean file under the project header.
    Check {
        file: PathBuf,
        /// Accept `sorry` (statement-only check).
        #[arg(long)]
        statement_only: bool,
        #[arg(long)]
        mock_lean: bool,
    },
    /// Check every recorded final proof in a ledger again.
    Replay {
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long)]
        mock_lean: bool,
    },
}

fn verifier(config: &Config, mock: bool) -> Result<Box<dyn Verifier>> {
    if mock {
        return Ok(Box::new(DirectiveVerifier::new()));
    }
    let lean = LeanVerifier::new(config.lean.clone()).context("cannot set up the Lean workspace")?;
    Ok(Box::new(lean))
}

fn run(
    config: &Config,
    dataset: &Path,
    ledger_path: &Path,
    script: Option<&Path>,
    mock_lean: bool,
    parallelism: Option<usize>,
) -> Result<ExitCode> {
    let problems = load_problems(dataset, &config.harness.sanitize)?;
    let verifier = verifier(config, mock_lean)?;
    let (ledger, existing) = Ledger::open(ledger_path)?;
    let parallelism = parallelism.unwrap_or(config.harness.problem_parallelism);

    let outcome = match script {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let book = ScriptBook::from_json(&text).context("invalid script file")?;
            let factory = book.gateway_factory(config.gateway.clone());
            run_benchmark(&problems, &config.run, parallelism, &factory, verifier.as_ref(), &ledger, &existing)?
        }
        None => {
            for role in ModelRole::ALL {
                if config.gateway.endpoint(role).is_none() {
                    bail!("no endpoint configured for {role}; set it in the config file or PROVER_AGENT_* variables");
                }
            }
            let shared = Arc::new(Gateway::new(Arc::new(HttpBackend::new(&config.gateway)), config.gateway.clone()));
            let factory = move |_: &_| Arc::clone(&shared);
            run_benchmark(&problems, &config.run, parallelism, &factory, verifier.as_ref(), &ledger, &existing)?
        }
    };
    print!("{}", render_report(&outcome.report));
    Ok(ExitCode::SUCCESS)
}

fn report(config: &Config, ledger: &Path, json: bool) -> Result<ExitCode> {
    let records = read_ledger(ledger)?.records();
    let report = Report::from_records(&records, &config.run.budget);
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", render_report(&report));
    }
    Ok(ExitCode::SUCCESS)
}

fn check(config: &Config, file: &Path, statement_only: bool, mock: bool) -> Result<ExitCode> {
    let source = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let origin = if statement_only { CheckOrigin::StatementOnlyCheck } else { CheckOrigin::ProofCheck };
    let unit = compose_unit(&config.run.header, &source, &[], origin)?;
    let report = verifier(config, mock)?.check(&unit, config.run.check_timeout())?;
    print!("{}", report.raw_output);
    println!(
        "{}: {} error(s), sorry: {}, timed out: {}, {:.1}s",
        if report.success { "OK" } else { "FAILED" },
        report.error_count(),
        report.uses_sorry,
        report.timed_out,
        report.elapsed.as_secs_f64()
    );
    Ok(if report.success { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn replay(config: &Config, ledger: &Path, mock: bool) -> Result<ExitCode> {
    let records = read_ledger(ledger)?.records();
    let results = replay_final_proofs(&records, verifier(config, mock)?.as_ref(), config.run.check_timeout());
    let mut all_ok = true;
    for r in &results {
        all_ok &= r.reproduced;
        println!("{:<40} {} ({})", r.problem, if r.reproduced { "ok" } else { "FAILED" }, r.detail);
    }
    println!("{} of {} final proofs re-verified", results.iter().filter(|r| r.reproduced).count(), results.len());
    Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> Result<ExitCode> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let config = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Run { dataset, ledger, script, mock_lean, parallelism } => {
            run(&config, &dataset, &ledger, script.as_deref(), mock_lean, parallelism)
        }
        Command::Report { ledger, json } => report(&config, &ledger, json),
        Command::Check { file, statement_only, mock_lean } => check(&config, &file, statement_only, mock_lean),
        Command::Replay { ledger, mock_lean } => replay(&config, &ledger, mock_lean),
    }
}
