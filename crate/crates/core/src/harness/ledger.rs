//! Append-only JSON-lines run ledger.
//!
//! The first line is a header carrying the schema version; every other line
//! is one orchestrator [`Event`]. Lines are written whole and flushed one at
//! a time, so a crash can leave at most one torn line at the end. Reading
//! ignores that line and reopening cuts it off before appending.

use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::orchestrator::{Event, EventSink, RunRecord};

pub const SCHEMA_VERSION: u32 = 1;
const HEADER_TYPE: &str = "ledger_header";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerHeader {
    #[serde(rename = "type")]
    pub kind: String,
    pub schema_version: u32,
    pub tool: String,
}

impl LedgerHeader {
    fn current() -> Self {
        Self {
            kind: HEADER_TYPE.into(),
            schema_version: SCHEMA_VERSION,
            tool: "prover-agent".into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LedgerError {
    #[error("ledger I/O: {0}")]
    Io(#[from] io::Error),
    #[error("ledger line {line} is corrupt: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("ledger schema version {found} is not supported (expected {SCHEMA_VERSION})")]
    SchemaMismatch { found: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerContents {
    pub header: LedgerHeader,
    pub events: Vec<Event>,
    /// Bytes of complete lines; anything after is a torn write.
    pub valid_len: u64,
}

impl LedgerContents {
    /// Final record of every problem, in order of completion. A problem run
    /// more than once (after an abort) keeps its latest record.
    pub fn records(&self) -> Vec<RunRecord> {
        let mut out: Vec<RunRecord> = Vec::new();
        for event in &self.events {
            if let Event::ProblemFinished { record } = event {
                out.retain(|r| r.problem.name != record.problem.name);
                out.push((**record).clone());
            }
        }
        out
    }
}

/// Parses ledger text.
pub fn parse_ledger(text: &str) -> Result<LedgerContents, LedgerError> {
    let mut header = None;
    let mut events = Vec::new();
    let mut offset = 0usize;
    let mut valid_len = 0usize;
    for (i, chunk) in text.split_inclusive('\n').enumerate() {
        let line_no = i + 1;
        offset += chunk.len();
        let Some(line) = chunk.strip_suffix('\n') else {
            tracing::warn!(line = line_no, "ignoring torn final ledger line");
            break;
        };
        valid_len = offset;
        if line.trim().is_empty() {
            continue;
        }
        let corrupt = |e: serde_json::Error| LedgerError::Corrupt { line: line_no, reason: e.to_string() };
        if header.is_none() {
            let h: LedgerHeader = serde_json::from_str(line).map_err(corrupt)?;
            if h.kind != HEADER_TYPE {
                return Err(LedgerError::Corrupt { line: line_no, reason: "missing ledger header".into() });
            }
            if h.schema_version != SCHEMA_VERSION {
                return Err(LedgerError::SchemaMismatch { found: h.schema_version });
            }
            header = Some(h);
        } else {
            events.push(serde_json::from_str(line).map_err(corrupt)?);
        }
    }
    Ok(LedgerContents {
        header: header.unwrap_or_else(LedgerHeader::current),
        events,
        valid_len: valid_len as u64,
    })
}

pub fn read_ledger(path: &Path) -> Result<LedgerContents, LedgerError> {
    parse_ledger(&std::fs::read_to_string(path)?)
}

/// Serializing appender; one writer per ledger file.
#[derive(Debug)]
pub struct Ledger {
    path: PathBuf,
    file: Mutex<File>,
    error: Mutex<Option<io::Error>>,
}

impl Ledger {
    /// Opens `path` for appending, creating it with a header if needed.
    /// Returns the events already present.
    pub fn open(path: &Path) -> Result<(Self, LedgerContents), LedgerError> {
        let existing = match std::fs::read_to_string(path) {
            Ok(text) if !text.is_empty() => Some(parse_ledger(&text)?),
            Ok(_) => None,
            Err(e) if e.kind() == io::ErrorKind::NotFound => None,
            Err(e) => return Err(e.into()),
        };
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        let contents = match existing {
            Some(contents) => {
                if file.metadata()?.len() > contents.valid_len {
                    file.set_len(contents.valid_len)?;
                }
                contents
            }
            None => {
                file.set_len(0)?;
                let mut line = serde_json::to_string(&LedgerHeader::current()).map_err(io::Error::other)?;
                line.push('\n');
                file.write_all(line.as_bytes())?;
                file.flush()?;
                LedgerContents { header: LedgerHeader::current(), events: Vec::new(), valid_len: line.len() as u64 }
            }
        };
        let ledger = Self { path: path.to_path_buf(), file: Mutex::new(file), error: Mutex::new(None) };
        Ok((ledger, contents))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, event: &Event) -> io::Result<()> {
        let mut line = serde_json::to_string(event).map_err(io::Error::other)?;
        line.push('\n');
        let mut file = self.file.lock().unwrap_or_else(|e| e.into_inner());
        file.write_all(line.as_bytes())?;
        file.flush()
    }

    /// First write error seen through the [`EventSink`] interface.
    pub fn take_error(&self) -> Option<io::Error> {
        self.error.lock().unwrap_or_else(|e| e.into_inner()).take()
    }
}

impl EventSink for Ledger {
    fn emit(&self, event: &Event) {
        if let Err(e) = self.append(event) {
            tracing::error!(path = %self.path.display(), error = %e, "ledger write failed");
            self.error.lock().unwrap_or_else(|e| e.into_inner()).get_or_insert(e);
        }
    }
}
