use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::lcs::{diff_slices, split_lines, DiffOp, LineDiff};
use super::DiffError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marker {
    Keep,
    Buggy,
}

impl Marker {
    pub fn prefix(self) -> char {
        match self {
            Marker::Keep => ' ',
            Marker::Buggy => '-',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedLine {
    pub marker: Marker,
    pub text: String,
}

/// A buggy program with every line marked as kept or buggy.
///
/// Rendered form: one prefix character per line (`-` buggy, a single space
/// otherwise) followed by the original text, lines joined by `\n`, no header.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DiffAnnotation {
    pub lines: Vec<AnnotatedLine>,
}

impl DiffAnnotation {
    /// Marks the given zero-based line indices of `buggy` as buggy.
    pub fn from_marks(buggy: &str, marks: &BTreeSet<usize>) -> Self {
        let lines = split_lines(buggy)
            .into_iter()
            .enumerate()
            .map(|(i, text)| AnnotatedLine {
                marker: if marks.contains(&i) {
                    Marker::Buggy
                } else {
                    Marker::Keep
                },
                text: text.to_string(),
            })
            .collect();
        Self { lines }
    }

    /// Zero-based indices of lines marked buggy.
    pub fn buggy_set(&self) -> BTreeSet<usize> {
        self.lines
            .iter()
            .enumerate()
            .filter(|(_, l)| l.marker == Marker::Buggy)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, line) in self.lines.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push(line.marker.prefix());
            out.push_str(&line.text);
        }
        out
    }

    /// Checks the annotation still describes `buggy` line for line.
    pub fn check_aligned(&self, buggy: &str) -> Result<(), DiffError> {
        let source = split_lines(buggy);
        let aligned = source.len() == self.lines.len()
            && source
                .iter()
                .zip(&self.lines)
                .all(|(s, l)| s.trim_end() == l.text.trim_end());
        if aligned {
            Ok(())
        } else {
            Err(DiffError::Misaligned {
                annotation: self.lines.len(),
                buggy: source.len(),
            })
        }
    }
}

impl fmt::Display for DiffAnnotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Builds the Code Diff for `buggy`: lines deleted by `diff` are marked buggy,
/// inserted lines are dropped.
pub fn encode_code_diff(buggy: &str, diff: &LineDiff) -> Result<DiffAnnotation, DiffError> {
    let source = split_lines(buggy);
    if diff.source_len() != source.len() {
        return Err(DiffError::LineCountMismatch {
            diff: diff.source_len(),
            buggy: source.len(),
        });
    }
    let mut lines = Vec::with_capacity(source.len());
    let mut next = source.iter();
    for op in &diff.ops {
        let marker = match op {
            DiffOp::Keep(_) => Marker::Keep,
            DiffOp::Delete(_) => Marker::Buggy,
            DiffOp::Insert(_) => continue,
        };
        let text = next.next().expect("source length checked above");
        lines.push(AnnotatedLine {
            marker,
            text: text.to_string(),
        });
    }
    Ok(DiffAnnotation { lines })
}

/// The reply could not be aligned with any line of the buggy program.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("no localization: {reason}")]
pub struct NoLocalization {
    pub reason: String,
}

impl NoLocalization {
    pub fn new(reason: impl Into<String>) -> Self {
        Self {
            reason: reason.into(),
        }
    }
}

/// Result of reading a model-produced annotation back against the buggy code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedAnnotation {
    pub annotation: DiffAnnotation,
    /// False when the reply needed best-effort alignment: altered or missing
    /// lines, or extra non-blank lines.
    pub valid: bool,
}

/// Reads an annotation emitted by a model.
///
/// The first fenced block is used when the reply contains one. Lines are
/// matched to the buggy program positionally when possible and otherwise by
/// text alignment; `+` lines and git headers are ignored, extra blank lines
/// are tolerated.
pub fn parse_code_diff(text: &str, buggy: &str) -> Result<ParsedAnnotation, NoLocalization> {
    let source = split_lines(buggy);
    if source.is_empty() {
        return Err(NoLocalization::new("buggy program is empty"));
    }
    let body = first_fenced_block(text).unwrap_or(text);
    let parsed: Vec<(Marker, &str)> = split_lines(body)
        .into_iter()
        .filter(|l| !is_diff_header(l))
        .filter_map(classify_line)
        .collect();

    let positional = parsed.len() == source.len()
        && parsed
            .iter()
            .zip(&source)
            .all(|((_, t), s)| t.trim_end() == s.trim_end());
    if positional {
        let lines = parsed
            .iter()
            .zip(&source)
            .map(|((marker, _), s)| AnnotatedLine {
                marker: *marker,
                text: s.to_string(),
            })
            .collect();
        return Ok(ParsedAnnotation {
            annotation: DiffAnnotation { lines },
            valid: true,
        });
    }

    // Indentation-insensitive alignment tolerates a dropped prefix space.
    let parsed_keys: Vec<&str> = parsed.iter().map(|(_, t)| t.trim()).collect();
    let source_keys: Vec<&str> = source.iter().map(|s| s.trim()).collect();
    let script = diff_slices(&parsed_keys, &source_keys);

    let mut markers = vec![Marker::Keep; source.len()];
    let mut matched = vec![false; source.len()];
    let mut exact = true;
    let mut stray_text = false;
    let mut substantive_match = false;
    let (mut pi, mut si) = (0, 0);
    for op in &script.ops {
        match op {
            DiffOp::Keep(_) => {
                let (marker, t) = parsed[pi];
                markers[si] = marker;
                matched[si] = true;
                exact &= t.trim_end() == source[si].trim_end();
                substantive_match |= !source_keys[si].is_empty();
                pi += 1;
                si += 1;
            }
            DiffOp::Delete(_) => {
                stray_text |= !parsed_keys[pi].is_empty();
                pi += 1;
            }
            DiffOp::Insert(_) => si += 1,
        }
    }
    if !substantive_match {
        return Err(NoLocalization::new("no line of the reply matches the buggy code"));
    }
    let valid = exact && !stray_text && matched.iter().all(|m| *m);
    let lines = source
        .iter()
        .zip(markers)
        .map(|(s, marker)| AnnotatedLine {
            marker,
            text: s.to_string(),
        })
        .collect();
    Ok(ParsedAnnotation {
        annotation: DiffAnnotation { lines },
        valid,
    })
}

fn classify_line(line: &str) -> Option<(Marker, &str)> {
    if let Some(rest) = line.strip_prefix('-') {
        Some((Marker::Buggy, rest))
    } else if line.starts_with('+') {
        None
    } else if let Some(rest) = line.strip_prefix(' ') {
        Some((Marker::Keep, rest))
    } else {
        Some((Marker::Keep, line))
    }
}

fn is_diff_header(line: &str) -> bool {
    line.starts_with("@@")
        || line.starts_with("+++ ")
        || line.starts_with("--- a/")
        || line.starts_with("diff --git")
        || line.starts_with("index ")
}

/// Contents of the first ``` fenced block, without the fence lines.
pub(crate) fn first_fenced_block(text: &str) -> Option<&str> {
    let open = text.find("```")?;
    let after_open = &text[open + 3..];
    let body_start = after_open.find('\n')? + 1;
    let body = &after_open[body_start..];
    let close = find_closing_fence(body)?;
    let block = &body[..close];
    Some(block.strip_suffix('\n').unwrap_or(block))
}

fn find_closing_fence(body: &str) -> Option<usize> {
    let mut offset = 0;
    for line in body.split_inclusive('\n') {
        if line.trim_start().starts_with("```") {
            return Some(offset);
        }
        offset += line.len();
    }
    None
}
