//! Subprocess execution with a wall-clock limit and per-run scratch
//! directories. Standard streams go through files so a chatty child can never
//! block on a full pipe.

use std::fs::{self, File};
use std::io;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use tempfile::TempDir;

use crate::trace::ExitStatus;

/// Resource bounds for one program run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    pub wall_seconds: f64,
    pub max_events: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            wall_seconds: 5.0,
            max_events: 10_000,
        }
    }
}

impl Limits {
    pub fn wall(&self) -> Duration {
        Duration::from_secs_f64(self.wall_seconds.max(0.0))
    }
}

/// What a program printed and how it ended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Execution {
    pub actual_output: String,
    pub exit_status: ExitStatus,
}

/// Runs a program on one input. Implementations must give every run a fresh
/// working directory.
pub trait ExecBackend: Send + Sync {
    fn execute(&self, source: &str, input: &str, limits: &Limits) -> Execution;
}

impl<F> ExecBackend for F
where
    F: Fn(&str, &str, &Limits) -> Execution + Send + Sync,
{
    fn execute(&self, source: &str, input: &str, limits: &Limits) -> Execution {
        self(source, input, limits)
    }
}

/// Runs Python sources with a local interpreter.
#[derive(Debug, Clone)]
pub struct PythonBackend {
    pub interpreter: String,
}

impl Default for PythonBackend {
    fn default() -> Self {
        Self {
            interpreter: "python3".to_string(),
        }
    }
}

impl PythonBackend {
    pub fn new(interpreter: impl Into<String>) -> Self {
        Self {
            interpreter: interpreter.into(),
        }
    }
}

impl ExecBackend for PythonBackend {
    fn execute(&self, source: &str, input: &str, limits: &Limits) -> Execution {
        match self.try_execute(source, input, limits) {
            Ok(execution) => execution,
            Err(err) => Execution {
                actual_output: String::new(),
                exit_status: ExitStatus::Exception {
                    name: "HarnessError".into(),
                    message: err.to_string(),
                },
            },
        }
    }
}

impl PythonBackend {
    fn try_execute(&self, source: &str, input: &str, limits: &Limits) -> io::Result<Execution> {
        let sandbox = Sandbox::new()?;
        let script = sandbox.write("main.py", source)?;
        let stdin = sandbox.write("stdin.txt", input)?;
        let mut cmd = Command::new(&self.interpreter);
        cmd.arg("-I").arg("-B").arg(&script);
        let out = sandbox.run(cmd, &stdin, limits.wall())?;
        let actual_output = normalize_newlines(&String::from_utf8_lossy(&out.stdout));
        let exit_status = if out.timed_out {
            ExitStatus::Timeout
        } else if out.success {
            ExitStatus::Ok
        } else {
            exception_from_stderr(&String::from_utf8_lossy(&out.stderr), out.code)
        };
        Ok(Execution {
            actual_output,
            exit_status,
        })
    }
}

/// Output of a finished (or killed) child process.
#[derive(Debug)]
pub struct ProcessOutput {
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub success: bool,
    pub code: Option<i32>,
    pub timed_out: bool,
}

/// A temporary directory holding inputs plus an empty `work/` directory used
/// as the child's working directory.
pub struct Sandbox {
    root: TempDir,
}

impl Sandbox {
    pub fn new() -> io::Result<Self> {
        let root = tempfile::Builder::new().prefix("adapr-run-").tempdir()?;
        fs::create_dir(root.path().join("work"))?;
        Ok(Self { root })
    }

    pub fn path(&self) -> &Path {
        self.root.path()
    }

    pub fn work_dir(&self) -> PathBuf {
        self.root.path().join("work")
    }

    pub fn write(&self, name: &str, contents: &str) -> io::Result<PathBuf> {
        let path = self.root.path().join(name);
        fs::write(&path, contents)?;
        Ok(path)
    }

    /// Runs `cmd` inside `work/` with stdin from `stdin`, killing it after
    /// `timeout`.
    pub fn run(&self, mut cmd: Command, stdin: &Path, timeout: Duration) -> io::Result<ProcessOutput> {
        let stdout_path = self.root.path().join("stdout.txt");
        let stderr_path = self.root.path().join("stderr.txt");
        cmd.current_dir(self.work_dir())
            .stdin(Stdio::from(File::open(stdin)?))
            .stdout(Stdio::from(File::create(&stdout_path)?))
            .stderr(Stdio::from(File::create(&stderr_path)?));
        let mut child = cmd.spawn()?;
        let started = Instant::now();
        let mut poll = Duration::from_millis(1);
        let (status, timed_out) = loop {
            if let Some(status) = child.try_wait()? {
                break (Some(status), false);
            }
            if started.elapsed() >= timeout {
                let _ = child.kill();
                let _ = child.wait();
                break (None, true);
            }
            thread::sleep(poll);
            poll = (poll * 2).min(Duration::from_millis(20));
        };
        Ok(ProcessOutput {
            stdout: fs::read(&stdout_path)?,
            stderr: fs::read(&stderr_path)?,
            success: status.is_some_and(|s| s.success()),
            code: status.and_then(|s| s.code()),
            timed_out,
        })
    }
}

pub fn normalize_newlines(text: &str) -> String {
    text.replace("\r\n", "\n")
}

/// Exception name and message from the last line of a Python traceback.
pub fn exception_from_stderr(stderr: &str, code: Option<i32>) -> ExitStatus {
    let last = stderr.lines().rev().find(|l| !l.trim().is_empty());
    match last {
        Some(line) if !line.starts_with(' ') => {
            let (name, message) = match line.split_once(':') {
                Some((name, message)) => (name.trim(), message.trim()),
                None => (line.trim(), ""),
            };
            ExitStatus::Exception {
                name: name.to_string(),
                message: message.to_string(),
            }
        }
        _ => ExitStatus::Exception {
            name: "NonZeroExit".into(),
            message: match code {
                Some(c) => format!("exit status {c}"),
                None => "terminated by signal".into(),
            },
        },
    }
}

/// Output comparison used by the judge: trailing whitespace on each line and
/// trailing blank lines are ignored, everything else must match exactly.
pub fn normalize_output(text: &str) -> String {
    let mut lines: Vec<&str> = text.split('\n').map(|l| l.trim_end()).collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines.join("\n")
}

pub fn outputs_match(actual: &str, expected: &str) -> bool {
    normalize_output(&normalize_newlines(actual)) == normalize_output(&normalize_newlines(expected))
}
