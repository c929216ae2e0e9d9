//! Contract with the external line tracer.
//!
//! The tracer is a separate program invoked as
//! `<tracer> <source-file> --input <file> --expected <file> --limits <json>`
//! that prints one JSON document on stdout:
//!
//! ```json
//! {"schema_version": 1,
//!  "io": {"input": "", "expected_output": "", "actual_output": "",
//!         "exit_status": {"kind": "ok"}},
//!  "events": [{"step": 1, "line": 1, "vars": {"x": "1"}}],
//!  "truncated": false}
//! ```
//!
//! `exit_status.kind` is one of `ok`, `timeout` or `exception` (the latter with
//! `name` and `message`). `vars` holds only variables whose rendering changed
//! since the previous event, in assignment order.

use std::io;
use std::process::Command;
use std::time::Duration;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TestCase;
use crate::diffkit::split_lines;
use crate::exec::{ExecBackend, Limits, Sandbox};

pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// Extra time granted to the tracer process on top of the program limit.
const TRACER_GRACE: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExitStatus {
    Ok,
    Exception { name: String, message: String },
    Timeout,
}

/// Program I/O for one failed test: input, expected and actual output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoCapture {
    pub input: String,
    pub expected_output: String,
    pub actual_output: String,
    pub exit_status: ExitStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: u64,
    #[serde(rename = "line")]
    pub line_no: usize,
    #[serde(rename = "vars", default)]
    pub changed_vars: IndexMap<String, String>,
}

/// Everything the locator prompt needs about the failing run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceBundle {
    pub io: IoCapture,
    pub events: Vec<TraceEvent>,
    #[serde(default)]
    pub truncated: bool,
}

impl TraceBundle {
    /// I/O only, for when no tracer is available.
    pub fn io_only(io: IoCapture) -> Self {
        Self {
            io,
            events: Vec::new(),
            truncated: false,
        }
    }

    pub fn has_events(&self) -> bool {
        !self.events.is_empty()
    }
}

/// The document printed by the tracer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceDocument {
    pub schema_version: u32,
    pub io: IoCapture,
    pub events: Vec<TraceEvent>,
    pub truncated: bool,
}

impl TraceDocument {
    pub fn validate(&self, source: &str) -> Result<(), TraceError> {
        if self.schema_version != TRACE_SCHEMA_VERSION {
            return Err(TraceError::Schema(format!(
                "unsupported schema_version {} (expected {TRACE_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let line_count = split_lines(source).len();
        let mut last_step = 0;
        for event in &self.events {
            if event.step <= last_step {
                return Err(TraceError::Schema(format!(
                    "step {} does not increase after {last_step}",
                    event.step
                )));
            }
            last_step = event.step;
            if event.line_no == 0 || event.line_no > line_count {
                return Err(TraceError::Schema(format!(
                    "event at step {} references line {} of a {line_count}-line program",
                    event.step, event.line_no
                )));
            }
        }
        Ok(())
    }

    pub fn into_bundle(self) -> TraceBundle {
        TraceBundle {
            io: self.io,
            events: self.events,
            truncated: self.truncated,
        }
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("failed to launch tracer: {0}")]
    Spawn(#[from] io::Error),
    #[error("tracer exceeded its time limit")]
    Timeout,
    #[error("tracer exited unsuccessfully: {0}")]
    Failed(String),
    #[error("tracer output is not a trace document: {0}")]
    Decode(#[from] serde_json::Error),
    #[error("trace document violates the schema: {0}")]
    Schema(String),
}

/// Invokes an external tracer command.
#[derive(Debug, Clone)]
pub struct TracerClient {
    /// Program followed by any leading arguments, e.g. `["python3", "tracer.py"]`.
    pub command: Vec<String>,
}

impl TracerClient {
    pub fn new(command: Vec<String>) -> Self {
        Self { command }
    }

    pub fn trace_run(
        &self,
        source: &str,
        test: &TestCase,
        limits: &Limits,
    ) -> Result<TraceDocument, TraceError> {
        let (program, leading) = self
            .command
            .split_first()
            .ok_or_else(|| TraceError::Failed("empty tracer command".into()))?;
        let sandbox = Sandbox::new()?;
        let source_path = sandbox.write("program.py", source)?;
        let input_path = sandbox.write("input.txt", &test.input)?;
        let expected_path = sandbox.write("expected.txt", &test.expected_output)?;
        let empty = sandbox.write("stdin.txt", "")?;
        let mut cmd = Command::new(program);
        cmd.args(leading)
            .arg(&source_path)
            .arg("--input")
            .arg(&input_path)
            .arg("--expected")
            .arg(&expected_path)
            .arg("--limits")
            .arg(serde_json::to_string(limits)?);
        let out = sandbox.run(cmd, &empty, limits.wall() + TRACER_GRACE)?;
        if out.timed_out {
            return Err(TraceError::Timeout);
        }
        if !out.success {
            return Err(TraceError::Failed(
                String::from_utf8_lossy(&out.stderr).trim().to_string(),
            ));
        }
        let doc: TraceDocument = serde_json::from_slice(&out.stdout)?;
        doc.validate(source)?;
        Ok(doc)
    }
}

/// Produces the trace bundle for a failing run: the tracer when configured
/// and working, otherwise a plain execution that yields I/O only.
pub fn capture_bundle(
    tracer: Option<&TracerClient>,
    backend: &dyn ExecBackend,
    source: &str,
    test: &TestCase,
    limits: &Limits,
) -> TraceBundle {
    if let Some(tracer) = tracer {
        match tracer.trace_run(source, test, limits) {
            Ok(doc) => return doc.into_bundle(),
            Err(err) => tracing::warn!(test = %test.id, "tracer failed, using plain run: {err}"),
        }
    }
    let run = backend.execute(source, &test.input, limits);
    TraceBundle::io_only(IoCapture {
        input: test.input.clone(),
        expected_output: test.expected_output.clone(),
        actual_output: run.actual_output,
        exit_status: run.exit_status,
    })
}
