//! Pass-rate reports over finished runs.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::orchestrator::{BudgetConfig, ProblemStatus, RunRecord, Split};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub total: usize,
    pub solved: usize,
}

impl Counts {
    fn add(&mut self, solved: bool) {
        self.total += 1;
        self.solved += usize::from(solved);
    }

    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.solved as f64 / self.total as f64
        }
    }
}

/// Problems solved within growing prover-sample budgets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tiers {
    /// Budget boundaries: 1, n_init, n_init + n_refine.
    pub budgets: [u64; 3],
    pub within_one: usize,
    pub within_init: usize,
    pub within_target: usize,
    pub pipeline: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub overall: Counts,
    pub per_split: BTreeMap<Split, Counts>,
    pub per_category: BTreeMap<String, Counts>,
    pub tiers: Tiers,
    pub malformed: usize,
    pub aborted: usize,
    pub prover_samples: u64,
}

impl Report {
    pub fn from_records(records: &[RunRecord], budget: &BudgetConfig) -> Self {
        let mut report = Report {
            tiers: Tiers {
                budgets: [1, u64::from(budget.n_init), budget.per_target()],
                ..Tiers::default()
            },
            ..Report::default()
        };
        for r in records {
            let solved = r.solved();
            report.overall.add(solved);
            report.per_split.entry(r.problem.split).or_default().add(solved);
            report.per_category.entry(r.problem.category.clone()).or_default().add(solved);
            report.prover_samples += r.totals.prover_samples;
            match r.status {
                ProblemStatus::Malformed => report.malformed += 1,
                ProblemStatus::Aborted => report.aborted += 1,
                _ => {}
            }
            if !solved {
                continue;
            }
            report.tiers.pipeline += 1;
            let samples = r.solved_in.as_ref().map_or(u64::MAX, |s| s.prover_samples);
            let [one, init, target] = report.tiers.budgets;
            report.tiers.within_one += usize::from(samples <= one);
            report.tiers.within_init += usize::from(samples <= init);
            report.tiers.within_target += usize::from(samples <= target);
        }
        report
    }
}

fn pct(c: Counts) -> String {
    format!("{:5.1}%", 100.0 * c.rate())
}

/// Plain-text tables: overall, per split, budget tiers and per category.
pub fn render_report(report: &Report) -> String {
    let mut out = String::new();
    let o = report.overall;
    let _ = writeln!(out, "problems  solved  rate");
    let _ = writeln!(out, "{:>8}  {:>6}  {}", o.total, o.solved, pct(o));
    if report.malformed + report.aborted > 0 {
        let _ = writeln!(out, "malformed: {}  aborted: {}", report.malformed, report.aborted);
    }
    let _ = writeln!(out, "prover samples: {}", report.prover_samples);

    let _ = writeln!(out, "\nsplit    solved/total  rate");
    for (split, c) in &report.per_split {
        let _ = writeln!(out, "{:<8} {:>5}/{:<6}  {}", split.as_str(), c.solved, c.total, pct(*c));
    }

    let t = report.tiers;
    let _ = writeln!(out, "\nbudget       solved  rate");
    let rows = [
        (format!("pass@{}", t.budgets[0]), t.within_one),
        (format!("pass@{}", t.budgets[1]), t.within_init),
        (format!("pass@{}", t.budgets[2]), t.within_target),
        ("pipeline".to_string(), t.pipeline),
    ];
    for (label, solved) in rows {
        let c = Counts { total: o.total, solved };
        let _ = writeln!(out, "{label:<12} {solved:>6}  {}", pct(c));
    }

    if !report.per_category.is_empty() {
        let width = report.per_category.keys().map(|k| k.chars().count()).max().unwrap_or(8).max(8);
        let _ = writeln!(out, "\n{:<width$}  solved/total  rate", "category");
        for (cat, c) in &report.per_category {
            let _ = writeln!(out, "{cat:<width$}  {:>5}/{:<6}  {}", c.solved, c.total, pct(*c));
        }
    }
    out
}
