//! Line diffs between a buggy program and its fix, the Code Diff annotation
//! format, and the consistency metric built on top of both.

mod annotation;
mod consistency;
mod lcs;

pub use annotation::{
    encode_code_diff, parse_code_diff, AnnotatedLine, DiffAnnotation, Marker, NoLocalization,
    ParsedAnnotation,
};
pub(crate) use annotation::first_fenced_block;
pub use consistency::{consistency, consistency_reported};
pub use lcs::{line_diff, normalize_line, split_lines, DiffOp, LineDiff};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DiffError {
    #[error("diff covers {diff} buggy lines but the buggy code has {buggy}")]
    LineCountMismatch { diff: usize, buggy: usize },
    #[error("annotation has {annotation} lines but the buggy code has {buggy}")]
    Misaligned { annotation: usize, buggy: usize },
}
