//! Code extraction, sandboxed execution and answer normalization.
//!
//! Each program runs in a fresh guest interpreter process. The process gets
//! an ephemeral working directory and a scrubbed environment. It is confined
//! by resource limits, Landlock filesystem rules and a seccomp socket filter,
//! and is killed as a process group when the wall-clock timeout expires. The
//! bundled shim (`assets/shim.py`) runs the code with empty `nodes` and
//! `edges` bindings and prints `ans` on one tagged line.

mod confine;
mod extract;
mod normalize;

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::{mpsc, Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use std::os::unix::process::CommandExt;
use wait_timeout::ChildExt;

pub use confine::landlock_abi;
pub use extract::{extract_code, extract_code_bytes, ExtractError, ExtractedCode, CODE_END, CODE_START};
pub use normalize::{extract_text_answer, normalize_answer, parse_answer_text, NormalizeError};

use crate::assets;
use crate::tasks::TaskKind;

/// Tag that starts the shim's result line.
pub const RESULT_PREFIX: &str = "CODEGRAPH_ANS\t";

const STDOUT_CAP: usize = 1 << 20;
const STDERR_CAP: usize = 64 << 10;
const STDERR_EXCERPT: usize = 2000;
const FILE_SIZE_CAP: u64 = 16 << 20;

/// Limits for one guest execution. Network access is always denied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SandboxLimits {
    /// Wall-clock limit in seconds.
    pub wall_timeout_secs: f64,
    /// Address-space cap in bytes.
    pub memory_cap_bytes: u64,
    /// Parent directory for the ephemeral working directories; the system
    /// temporary directory when unset.
    pub working_dir: Option<PathBuf>,
    /// Guest interpreter, resolved on `PATH` when not absolute.
    pub interpreter: PathBuf,
    /// Refuse to run when the kernel cannot confine filesystem access.
    pub require_fs_isolation: bool,
}

impl Default for SandboxLimits {
    fn default() -> Self {
        Self {
            wall_timeout_secs: 10.0,
            memory_cap_bytes: 256 << 20,
            working_dir: None,
            interpreter: PathBuf::from("python3"),
            require_fs_isolation: true,
        }
    }
}

impl SandboxLimits {
    pub const NETWORK_FORBIDDEN: bool = true;

    pub fn validate(&self) -> Result<(), String> {
        if !(self.wall_timeout_secs.is_finite() && self.wall_timeout_secs > 0.0) {
            return Err(format!("wall_timeout_secs must be positive, got {}", self.wall_timeout_secs));
        }
        if self.memory_cap_bytes < (16 << 20) {
            return Err(format!("memory_cap_bytes must be at least 16 MiB, got {}", self.memory_cap_bytes));
        }
        Ok(())
    }

    fn wall_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.wall_timeout_secs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionStatus {
    Ok,
    Timeout,
    RuntimeError,
    NoAns,
    LaunchError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub status: ExecutionStatus,
    /// `str(ans)`; present exactly when `status` is `ok`.
    pub ans_text: Option<String>,
    pub stderr_excerpt: String,
    pub duration_ms: u64,
}

impl ExecutionResult {
    fn failed(status: ExecutionStatus, stderr: impl Into<String>, started: Instant) -> Self {
        Self {
            status,
            ans_text: None,
            stderr_excerpt: stderr.into(),
            duration_ms: started.elapsed().as_millis() as u64,
        }
    }
}

fn resolve_interpreter(name: &Path) -> Option<PathBuf> {
    if name.components().count() > 1 {
        return name.is_file().then(|| name.to_path_buf());
    }
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path)
        .map(|dir| dir.join(name))
        .find(|candidate| candidate.is_file())
}

/// Directories the interpreter needs to read: its own location and its
/// installation prefixes. Queried once per interpreter, outside the sandbox.
type ReadPathCache = Mutex<Vec<(PathBuf, Vec<PathBuf>)>>;

fn interpreter_read_paths(interpreter: &Path) -> Vec<PathBuf> {
    static CACHE: OnceLock<ReadPathCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let mut cache = cache.lock().unwrap_or_else(|e| e.into_inner());
    if let Some((_, paths)) = cache.iter().find(|(p, _)| p == interpreter) {
        return paths.clone();
    }
    let mut paths = Vec::new();
    if let Ok(real) = std::fs::canonicalize(interpreter) {
        if let Some(dir) = real.parent() {
            paths.push(dir.to_path_buf());
        }
    }
    if let Ok(out) = Command::new(interpreter)
        .args(["-I", "-S", "-c", "import sys; print(sys.base_prefix); print(sys.prefix)"])
        .stdin(Stdio::null())
        .stderr(Stdio::null())
        .output()
    {
        for line in String::from_utf8_lossy(&out.stdout).lines() {
            let p = PathBuf::from(line.trim());
            if p.is_absolute() && p != Path::new("/") && !paths.contains(&p) {
                paths.push(p);
            }
        }
    }
    cache.push((interpreter.to_path_buf(), paths.clone()));
    paths
}

/// Reads a pipe to the end, keeping at most `cap` bytes.
fn drain(mut pipe: impl Read + Send + 'static, cap: usize) -> mpsc::Receiver<Vec<u8>> {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let mut kept = Vec::new();
        let mut buf = [0u8; 8192];
        loop {
            match pipe.read(&mut buf) {
                Ok(0) | Err(_) => break,
                Ok(n) => {
                    let room = cap.saturating_sub(kept.len());
                    kept.extend_from_slice(&buf[..n.min(room)]);
                }
            }
        }
        let _ = tx.send(kept);
    });
    rx
}

fn unescape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

/// The value of the last result line in the shim's output.
fn parse_result_line(stdout: &str) -> Option<String> {
    stdout
        .lines()
        .rev()
        .find_map(|line| line.strip_prefix(RESULT_PREFIX))
        .map(unescape)
}

fn excerpt(stderr: &[u8]) -> String {
    let text = String::from_utf8_lossy(stderr);
    let text = text.trim();
    if text.len() <= STDERR_EXCERPT {
        return text.to_string();
    }
    let mut cut = text.len() - STDERR_EXCERPT;
    while !text.is_char_boundary(cut) {
        cut += 1;
    }
    text[cut..].to_string()
}

/// Runs extracted code in a fresh sandboxed guest process.
pub fn run_sandboxed(code: &ExtractedCode, task: TaskKind, limits: &SandboxLimits) -> ExecutionResult {
    let _ = task; // every task shares the same shim protocol
    run_code(&code.code, limits)
}

/// Runs program text in a fresh sandboxed guest process.
pub fn run_code(code: &str, limits: &SandboxLimits) -> ExecutionResult {
    let started = Instant::now();
    let launch_error = |msg: String| ExecutionResult::failed(ExecutionStatus::LaunchError, msg, started);
    if let Err(e) = limits.validate() {
        return launch_error(e);
    }
    let Some(interpreter) = resolve_interpreter(&limits.interpreter) else {
        return launch_error(format!("interpreter `{}` not found", limits.interpreter.display()));
    };
    let mut builder = tempfile::Builder::new();
    builder.prefix("codegraph-run-");
    let workdir = match &limits.working_dir {
        Some(parent) => builder.tempdir_in(parent),
        None => builder.tempdir(),
    };
    let workdir = match workdir {
        Ok(dir) => dir,
        Err(e) => return launch_error(format!("cannot create working directory: {e}")),
    };
    let shim_path = workdir.path().join("shim.py");
    if let Err(e) = std::fs::write(&shim_path, assets::SHIM) {
        return launch_error(format!("cannot write shim: {e}"));
    }
    let rlimits = confine::Rlimits {
        address_space: limits.memory_cap_bytes,
        cpu_seconds: limits.wall_timeout_secs.ceil() as u64 + 1,
        file_size: FILE_SIZE_CAP,
    };
    let confinement = match confine::Confinement::prepare(
        workdir.path(),
        &interpreter_read_paths(&interpreter),
        rlimits,
        limits.require_fs_isolation,
    ) {
        Ok(c) => c,
        Err(e) => return launch_error(format!("cannot prepare sandbox: {e}")),
    };

    let mut command = Command::new(&interpreter);
    command
        .args(["-I", "-S", "-B"])
        .arg(&shim_path)
        .current_dir(workdir.path())
        .env_clear()
        .env("PATH", "/usr/local/bin:/usr/bin:/bin")
        .env("LANG", "C.UTF-8")
        .env("HOME", workdir.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    let confinement = Arc::new(confinement);
    let hook = Arc::clone(&confinement);
    // SAFETY: the hook only performs raw, non-allocating system calls.
    unsafe {
        command.pre_exec(move || hook.apply_in_child());
    }
    let spawned = command.spawn();
    drop(command);
    drop(confinement);
    let mut child = match spawned {
        Ok(child) => child,
        Err(e) => return launch_error(format!("cannot start interpreter: {e}")),
    };
    let pid = child.id();
    let stdout = drain(child.stdout.take().expect("piped stdout"), STDOUT_CAP);
    let stderr = drain(child.stderr.take().expect("piped stderr"), STDERR_CAP);
    if let Some(mut stdin) = child.stdin.take() {
        // Written from a thread so a guest that never reads cannot stall the
        // timeout. A guest that dies early closes its end; that surfaces as
        // its exit status.
        let code = code.to_owned();
        std::thread::spawn(move || {
            let _ = stdin.write_all(code.as_bytes());
        });
    }

    let waited = child.wait_timeout(limits.wall_timeout());
    let (exit, timed_out) = match waited {
        Ok(Some(status)) => (Some(status), false),
        Ok(None) | Err(_) => {
            confine::kill_group(pid);
            let _ = child.kill();
            (child.wait().ok(), true)
        }
    };
    // Reap stray descendants so the pipes close.
    confine::kill_group(pid);
    let grace = Duration::from_millis(500);
    let stdout = stdout.recv_timeout(grace).unwrap_or_default();
    let stderr = stderr.recv_timeout(grace).unwrap_or_default();
    let duration_ms = started.elapsed().as_millis() as u64;
    let stderr_excerpt = excerpt(&stderr);

    if timed_out {
        return ExecutionResult {
            status: ExecutionStatus::Timeout,
            ans_text: None,
            stderr_excerpt,
            duration_ms,
        };
    }
    let code = exit.and_then(|s| s.code());
    let (status, ans_text) = match code {
        Some(0) => match parse_result_line(&String::from_utf8_lossy(&stdout)) {
            Some(ans) => (ExecutionStatus::Ok, Some(ans)),
            None => (ExecutionStatus::RuntimeError, None),
        },
        Some(3) => (ExecutionStatus::NoAns, None),
        _ => (ExecutionStatus::RuntimeError, None),
    };
    ExecutionResult {
        status,
        ans_text,
        stderr_excerpt,
        duration_ms,
    }
}
