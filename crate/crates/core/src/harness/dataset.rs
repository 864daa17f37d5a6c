//! Problem sets as JSON lines: one object per line with `name`,
//! `formal_statement`, `split`, `category` and an optional `header_override`.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Deserialize;

use crate::extraction::{declared_names, rename_declaration, NameRegistry, SanitizeConfig};
use crate::orchestrator::{ProblemStatement, Split};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("problem `{0}` appears more than once")]
    DuplicateName(String),
}

#[derive(Deserialize)]
struct RawRecord {
    name: Option<String>,
    formal_statement: Option<String>,
    split: Option<Split>,
    category: Option<String>,
    #[serde(default)]
    header_override: Option<String>,
}

pub fn load_problems(path: &Path, sanitize: &SanitizeConfig) -> Result<Vec<ProblemStatement>, DatasetError> {
    parse_problems(&std::fs::read_to_string(path)?, sanitize)
}

/// Parses a dataset, sanitizing names and renaming each statement's
/// theorem accordingly. Blank lines are skipped.
pub fn parse_problems(text: &str, sanitize: &SanitizeConfig) -> Result<Vec<ProblemStatement>, DatasetError> {
    let mut registry = NameRegistry::new(*sanitize);
    let mut originals = BTreeSet::new();
    let mut problems = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        if raw_line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| DatasetError::MalformedRecord { line, reason };
        let raw: RawRecord = serde_json::from_str(raw_line).map_err(|e| malformed(e.to_string()))?;
        let field = |v: Option<String>, name: &str| {
            v.filter(|s| !s.trim().is_empty()).ok_or_else(|| malformed(format!("missing `{name}`")))
        };
        let original = field(raw.name, "name")?;
        let statement = field(raw.formal_statement, "formal_statement")?;
        let category = field(raw.category, "category")?;
        let split = raw.split.ok_or_else(|| malformed("missing `split`".into()))?;

        if !originals.insert(original.clone()) {
            return Err(DatasetError::DuplicateName(original));
        }
        let declared = declared_names(&statement);
        if declared != [original.clone()] {
            return Err(malformed(format!("statement must declare exactly `{original}`, found {declared:?}")));
        }
        let name = registry.assign(&original);
        let formal_statement = if name == original {
            statement
        } else {
            rename_declaration(&statement, &original, &name).ok_or_else(|| malformed("cannot rename theorem".into()))?
        };
        problems.push(ProblemStatement {
            name,
            original_name: original,
            formal_statement,
            split,
            category,
            header_override: raw.header_override,
        });
    }
    Ok(problems)
}
