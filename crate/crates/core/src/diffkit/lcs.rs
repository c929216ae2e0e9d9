use serde::{Deserialize, Serialize};

/// One step of a line-level edit script from buggy lines to fixed lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiffOp {
    Keep(String),
    Delete(String),
    Insert(String),
}

/// Minimal edit script between two programs.
///
/// `deleted` counts buggy lines that were deleted or changed and `added`
/// counts fixed lines that were added or changed. A changed line is one
/// `Delete` followed later by one `Insert`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineDiff {
    pub ops: Vec<DiffOp>,
    pub deleted: usize,
    pub added: usize,
}

impl LineDiff {
    pub fn kept(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, DiffOp::Keep(_)))
            .count()
    }

    /// Lines of the source side (keeps and deletes).
    pub fn source_len(&self) -> usize {
        self.kept() + self.deleted
    }

    /// Lines of the target side (keeps and inserts).
    pub fn target_len(&self) -> usize {
        self.kept() + self.added
    }

    pub fn is_identity(&self) -> bool {
        self.deleted == 0 && self.added == 0
    }

    /// Replays the script and returns the target lines.
    pub fn apply(&self) -> Vec<&str> {
        self.ops
            .iter()
            .filter_map(|op| match op {
                DiffOp::Keep(l) | DiffOp::Insert(l) => Some(l.as_str()),
                DiffOp::Delete(_) => None,
            })
            .collect()
    }
}

/// Splits program text into lines with CRLF folded to LF. A trailing newline
/// does not start a new line; the empty string has no lines.
pub fn split_lines(text: &str) -> Vec<&str> {
    text.lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect()
}

/// Normalization applied before comparing lines: trailing whitespace only.
pub fn normalize_line(line: &str) -> &str {
    line.trim_end()
}

/// LCS-based line diff. Among minimal scripts, the one matching lines as
/// early as possible is returned, with deletions ordered before insertions.
pub fn line_diff(buggy: &str, fixed: &str) -> LineDiff {
    let a: Vec<&str> = split_lines(buggy).into_iter().map(normalize_line).collect();
    let b: Vec<&str> = split_lines(fixed).into_iter().map(normalize_line).collect();
    diff_slices(&a, &b)
}

pub(crate) fn diff_slices(a: &[&str], b: &[&str]) -> LineDiff {
    let (n, m) = (a.len(), b.len());
    // suffix[i][j] = |LCS(a[i..], b[j..])|, stored row-major.
    let width = m + 1;
    let mut suffix = vec![0u32; (n + 1) * width];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            suffix[i * width + j] = if a[i] == b[j] {
                suffix[(i + 1) * width + j + 1] + 1
            } else {
                suffix[(i + 1) * width + j].max(suffix[i * width + j + 1])
            };
        }
    }

    let mut ops = Vec::with_capacity(n + m);
    let (mut deleted, mut added) = (0, 0);
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        if i < n && j < m && a[i] == b[j] {
            ops.push(DiffOp::Keep(a[i].to_string()));
            i += 1;
            j += 1;
        } else if i < n && (j == m || suffix[(i + 1) * width + j] >= suffix[i * width + j + 1]) {
            ops.push(DiffOp::Delete(a[i].to_string()));
            deleted += 1;
            i += 1;
        } else {
            ops.push(DiffOp::Insert(b[j].to_string()));
            added += 1;
            j += 1;
        }
    }
    LineDiff {
        ops,
        deleted,
        added,
    }
}
