use thiserror::Error;

use crate::diffkit::first_fenced_block;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("reply contains no usable code")]
pub struct ExtractError;

const KEYWORDS: &[&str] = &[
    "and", "assert", "break", "class", "continue", "def", "del", "elif", "else", "except",
    "for", "from", "global", "if", "import", "lambda", "nonlocal", "pass", "print", "raise",
    "return", "try", "while", "with", "yield",
];

#[derive(Clone, Copy, PartialEq, Eq)]
enum LineKind {
    Code,
    Blank,
    Prose,
}

fn first_word(line: &str) -> &str {
    let end = line
        .find(|c: char| !(c.is_alphanumeric() || c == '_'))
        .unwrap_or(line.len());
    &line[..end]
}

fn classify(line: &str) -> LineKind {
    let t = line.trim();
    if t.is_empty() {
        return LineKind::Blank;
    }
    if t.starts_with('#') || KEYWORDS.contains(&first_word(t)) {
        return LineKind::Code;
    }
    if line.starts_with([' ', '\t']) {
        return LineKind::Code;
    }
    let sentence_end = t.ends_with(['.', '!', '?', ':']) && !t.ends_with("..");
    let has_operator = t.contains(['=', '(', '[', '{']) || t.starts_with(['-', '+', '*']);
    if has_operator && !sentence_end {
        return LineKind::Code;
    }
    // bare expressions such as `n` or `a, b` on their own
    if !sentence_end && t.split_whitespace().count() == 1 && !t.starts_with(['`', '*']) {
        return LineKind::Code;
    }
    LineKind::Prose
}

fn has_code_signal(lines: &[&str]) -> bool {
    lines.iter().any(|l| {
        let t = l.trim();
        t.contains(['=', '(']) || KEYWORDS.contains(&first_word(t))
    })
}

/// Pulls a program out of a model reply: the first fenced block if any,
/// otherwise the longest run of code-looking lines (blank lines inside a run
/// are kept). A run counts only if it contains an assignment, a call or a
/// keyword.
pub fn extract_code(reply: &str) -> Result<String, ExtractError> {
    if let Some(block) = first_fenced_block(reply) {
        if block.trim().is_empty() {
            return Err(ExtractError);
        }
        return Ok(block.to_string());
    }

    let lines: Vec<&str> = reply.lines().map(|l| l.strip_suffix('\r').unwrap_or(l)).collect();
    let kinds: Vec<LineKind> = lines.iter().map(|l| classify(l)).collect();
    let mut best: Option<(usize, usize)> = None;
    let mut i = 0;
    while i < lines.len() {
        if kinds[i] != LineKind::Code {
            i += 1;
            continue;
        }
        let start = i;
        let mut end = i + 1;
        let mut j = i + 1;
        while j < lines.len() && kinds[j] != LineKind::Prose {
            if kinds[j] == LineKind::Code {
                end = j + 1;
            }
            j += 1;
        }
        let candidate = &lines[start..end];
        if has_code_signal(candidate) && best.is_none_or(|(s, e)| end - start > e - s) {
            best = Some((start, end));
        }
        i = j;
    }
    best.map(|(s, e)| lines[s..e].join("\n")).ok_or(ExtractError)
}
