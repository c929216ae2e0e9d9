//! Renders trace events as inline comments on the traced program, and the
//! failing test's I/O as a labelled text block.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffkit::split_lines;
use crate::trace::{ExitStatus, IoCapture, TraceEvent};

/// Lines visited more often than this are shown as first visit, ellipsis,
/// last visit.
pub const MAX_SHOWN_VISITS: usize = 3;

const COMMENT_DELIMITER: &str = " # ";
const VISIT_SEPARATOR: &str = "; ";
const ELLIPSIS: &str = "...";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceFormatError {
    #[error("trace event at step {step} references line {line} of a {lines}-line program")]
    LineOutOfBounds { step: u64, line: usize, lines: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedLine {
    pub source_text: String,
    /// Empty for lines that never executed.
    pub comment: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnnotatedProgram {
    pub lines: Vec<AnnotatedLine>,
    /// Zero-based indices of lines whose visits were elided.
    pub compression_marks: BTreeSet<usize>,
}

impl AnnotatedProgram {
    pub fn render(&self) -> String {
        self.lines
            .iter()
            .map(|l| {
                if l.comment.is_empty() {
                    l.source_text.clone()
                } else {
                    format!("{}{COMMENT_DELIMITER}{}", l.source_text, l.comment)
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Annotates every executed line with `step=<s>: <var>=<value>, ...` per
/// visit. Variables are listed in the order they were first assigned.
pub fn render_trace(source: &str, events: &[TraceEvent]) -> Result<AnnotatedProgram, TraceFormatError> {
    let source_lines = split_lines(source);
    let mut visits: Vec<Vec<&TraceEvent>> = vec![Vec::new(); source_lines.len()];
    let mut first_seen: HashMap<&str, usize> = HashMap::new();
    for event in events {
        if event.line_no == 0 || event.line_no > source_lines.len() {
            return Err(TraceFormatError::LineOutOfBounds {
                step: event.step,
                line: event.line_no,
                lines: source_lines.len(),
            });
        }
        for name in event.changed_vars.keys() {
            let next = first_seen.len();
            first_seen.entry(name.as_str()).or_insert(next);
        }
        visits[event.line_no - 1].push(event);
    }

    let mut compression_marks = BTreeSet::new();
    let lines = source_lines
        .iter()
        .zip(&visits)
        .enumerate()
        .map(|(idx, (text, line_visits))| {
            let shown: Vec<String> = if line_visits.len() > MAX_SHOWN_VISITS {
                compression_marks.insert(idx);
                vec![
                    format_visit(line_visits[0], &first_seen),
                    ELLIPSIS.to_string(),
                    format_visit(line_visits[line_visits.len() - 1], &first_seen),
                ]
            } else {
                line_visits
                    .iter()
                    .map(|v| format_visit(v, &first_seen))
                    .collect()
            };
            AnnotatedLine {
                source_text: text.to_string(),
                comment: shown.join(VISIT_SEPARATOR),
            }
        })
        .collect();
    Ok(AnnotatedProgram {
        lines,
        compression_marks,
    })
}

fn format_visit(event: &TraceEvent, first_seen: &HashMap<&str, usize>) -> String {
    let mut vars: Vec<(&String, &String)> = event.changed_vars.iter().collect();
    vars.sort_by_key(|(name, _)| first_seen.get(name.as_str()).copied().unwrap_or(usize::MAX));
    if vars.is_empty() {
        return format!("step={}", event.step);
    }
    let rendered: Vec<String> = vars
        .into_iter()
        .map(|(name, value)| format!("{name}={}", single_line(value)))
        .collect();
    format!("step={}: {}", event.step, rendered.join(", "))
}

fn single_line(value: &str) -> String {
    value.replace('\r', "\\r").replace('\n', "\\n")
}

/// Labelled Input / Expected Output / Actual Output block for the failing
/// run. A crash appends the exception line; a timeout replaces the actual
/// output with a notice.
pub fn render_io(io: &IoCapture) -> String {
    let mut out = String::new();
    push_section(&mut out, "Input", &io.input);
    push_section(&mut out, "Expected Output", &io.expected_output);
    match &io.exit_status {
        ExitStatus::Timeout => {
            out.push_str("Actual Output:\n(no result: the program exceeded the time limit)");
        }
        ExitStatus::Ok => push_section_last(&mut out, "Actual Output", &io.actual_output),
        ExitStatus::Exception { name, message } => {
            push_section(&mut out, "Actual Output", &io.actual_output);
            if message.is_empty() {
                out.push_str(name);
            } else {
                out.push_str(&format!("{name}: {message}"));
            }
        }
    }
    out
}

fn push_section(out: &mut String, label: &str, body: &str) {
    push_section_last(out, label, body);
    out.push('\n');
}

fn push_section_last(out: &mut String, label: &str, body: &str) {
    out.push_str(label);
    out.push_str(":\n");
    let body = body.trim_end_matches(['\n', '\r']);
    if body.is_empty() {
        out.push_str("(empty)");
    } else {
        out.push_str(body);
    }
}
