//! Datasets, configuration, the run ledger, benchmark execution and reports.

mod config;
mod dataset;
mod ledger;
mod report;
mod runner;

pub use config::{Config, ConfigError, HarnessConfig, ENV_PREFIX};
pub use dataset::{load_problems, parse_problems, DatasetError};
pub use ledger::{parse_ledger, read_ledger, Ledger, LedgerContents, LedgerError, LedgerHeader, SCHEMA_VERSION};
pub use report::{render_report, Counts, Report, Tiers};
pub use runner::{
    completed_problems, replay_final_proofs, run_benchmark, BenchmarkOutcome, GatewayFactory, HarnessError,
    ReplayResult, ScriptBook,
};

pub use crate::orchestrator::{ProblemStatement, Split};
