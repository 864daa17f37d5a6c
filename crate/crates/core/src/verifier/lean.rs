//! Checking units with a real Lean toolchain inside a pre-built project
//! workspace. Each check writes one file and runs the configured command
//! (`lake env lean <file>` by default) under a wall-clock timeout. A
//! semaphore caps the number of live toolchain processes.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use super::{SourceUnit, VerificationReport, Verifier, VerifierError};
use crate::sync::Semaphore;

pub const PINNED_LEAN_VERSION: &str = "4.9.0";

fn default_workers() -> usize {
    thread::available_parallelism()
        .map(|n| (n.get() / 2).max(1))
        .unwrap_or(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LeanConfig {
    /// Lean project with a `lean-toolchain` file and a built math library.
    pub workspace: PathBuf,
    /// Program and leading arguments; the unit file path is appended.
    pub command: Vec<String>,
    pub pinned_version: String,
    /// Turn a toolchain mismatch into a hard error instead of a warning.
    pub strict_toolchain: bool,
    pub workers: usize,
    /// Keep unit files on disk after checking.
    pub keep_files: bool,
}

impl Default for LeanConfig {
    fn default() -> Self {
        Self {
            workspace: PathBuf::from("lean-workspace"),
            command: vec!["lake".into(), "env".into(), "lean".into()],
            pinned_version: PINNED_LEAN_VERSION.into(),
            strict_toolchain: false,
            workers: default_workers(),
            keep_files: false,
        }
    }
}

/// Version named by a `lean-toolchain` file, e.g. `leanprover/lean4:v4.9.0`.
pub(crate) fn parse_toolchain_file(contents: &str) -> Option<String> {
    let spec = contents.lines().map(str::trim).find(|l| !l.is_empty())?;
    let tail = spec.rsplit(':').next()?;
    let version = tail.trim_start_matches('v');
    (!version.is_empty()).then(|| version.to_string())
}

#[derive(Debug)]
pub struct LeanVerifier {
    config: LeanConfig,
    toolchain: String,
    pool: Semaphore,
    counter: AtomicU64,
}

impl LeanVerifier {
    /// Validates the workspace and the pinned toolchain version.
    pub fn new(config: LeanConfig) -> Result<Self, VerifierError> {
        let toolchain = read_toolchain(&config.workspace)?;
        if toolchain != config.pinned_version {
            if config.strict_toolchain {
                return Err(VerifierError::ToolchainMismatch {
                    expected: config.pinned_version.clone(),
                    found: toolchain,
                });
            }
            tracing::warn!(
                pinned = %config.pinned_version,
                found = %toolchain,
                "Lean toolchain differs from the pinned version"
            );
        }
        if config.command.is_empty() {
            return Err(VerifierError::WorkspaceMissing("empty Lean command".into()));
        }
        let workers = config.workers.max(1);
        Ok(Self {
            config,
            toolchain,
            pool: Semaphore::new(workers),
            counter: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &LeanConfig {
        &self.config
    }

    pub fn toolchain(&self) -> &str {
        &self.toolchain
    }

    /// Highest number of toolchain processes alive at once so far.
    pub fn peak_live_processes(&self) -> usize {
        self.pool.peak()
    }

    fn units_dir(&self) -> PathBuf {
        self.config.workspace.join(".prover-agent")
    }
}

fn read_toolchain(workspace: &Path) -> Result<String, VerifierError> {
    if !workspace.is_dir() {
        return Err(VerifierError::WorkspaceMissing(workspace.display().to_string()));
    }
    let file = workspace.join("lean-toolchain");
    let contents = fs::read_to_string(&file)
        .map_err(|_| VerifierError::WorkspaceMissing(file.display().to_string()))?;
    parse_toolchain_file(&contents)
        .ok_or_else(|| VerifierError::WorkspaceMissing(format!("unreadable {}", file.display())))
}

impl Verifier for LeanVerifier {
    fn check(&self, unit: &SourceUnit, timeout: Duration) -> Result<VerificationReport, VerifierError> {
        if timeout.is_zero() {
            return Err(VerifierError::InvalidTimeout);
        }
        if !self.config.workspace.is_dir() {
            return Err(VerifierError::WorkspaceMissing(self.config.workspace.display().to_string()));
        }
        let _permit = self.pool.acquire();

        let dir = self.units_dir();
        fs::create_dir_all(&dir)?;
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let rel = PathBuf::from(".prover-agent").join(format!("{}-{n}.lean", unit.unit_id));
        let abs = self.config.workspace.join(&rel);
        fs::write(&abs, unit.text())?;

        let started = Instant::now();
        let result = run_with_timeout(&self.config, &rel, timeout);
        let elapsed = started.elapsed();
        if !self.config.keep_files {
            let _ = fs::remove_file(&abs);
        }
        let (exit_code, output, timed_out) = result?;
        Ok(VerificationReport::from_run(
            unit,
            exit_code,
            output,
            elapsed,
            timed_out,
            Some(self.toolchain.clone()),
        ))
    }
}

fn spawn_reader<R: Read + Send + 'static>(stream: Option<R>) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut s) = stream {
            let _ = s.read_to_end(&mut buf);
        }
        String::from_utf8_lossy(&buf).into_owned()
    })
}

fn run_with_timeout(
    config: &LeanConfig,
    file: &Path,
    timeout: Duration,
) -> Result<(Option<i32>, String, bool), VerifierError> {
    let mut cmd = Command::new(&config.command[0]);
    cmd.args(&config.command[1..])
        .arg(file)
        .current_dir(&config.workspace)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        // own process group so a timeout also reaps `lean` under `lake`
        cmd.process_group(0);
    }
    let mut child = cmd.spawn()?;
    let out = spawn_reader(child.stdout.take());
    let err = spawn_reader(child.stderr.take());

    let (status, timed_out) = match child.wait_timeout(timeout)? {
        Some(status) => (Some(status), false),
        None => {
            kill_tree(&mut child);
            (child.wait().ok(), true)
        }
    };
    let mut output = out.join().unwrap_or_default();
    output.push_str(&err.join().unwrap_or_default());
    let exit_code = if timed_out { None } else { status.and_then(|s| s.code()) };
    Ok((exit_code, output, timed_out))
}

fn kill_tree(child: &mut Child) {
    #[cfg(unix)]
    {
        let pgid = child.id() as libc::pid_t;
        // SAFETY: signalling a process group we created; no memory is touched.
        unsafe {
            libc::kill(-pgid, libc::SIGKILL);
        }
    }
    let _ = child.kill();
}
