//! Repair instances and the dataset builder that turns a submission archive
//! into (buggy, failed test, fix) instances split by problem.

mod archive;
mod bleu;
mod build;
mod split;
mod strip;

pub use archive::{
    load_archive, load_dataset, write_archive, write_dataset, Archive, Problem, SubmissionMeta, Suites,
};
pub use bleu::{bleu, code_bleu, tokenize};
pub use build::{build_pairs, PairingConfig, SIMILARITY_THRESHOLD};
pub use split::{split_and_cap, DatasetManifest, SplitConfig, SplitDataset};
pub use strip::strip_comments;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffkit::DiffAnnotation;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("need at least 3 problems to form train/val/test splits, got {0}")]
    TooFewProblems(usize),
    #[error("archive error at {path}: {message}")]
    Archive { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubmissionVerdict {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub id: String,
    pub user_id: String,
    pub problem_id: String,
    /// Orders submissions of one user on one problem.
    pub timestamp: u64,
    pub source: String,
    pub verdict: SubmissionVerdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestCase {
    #[serde(default)]
    pub id: String,
    pub input: String,
    pub expected_output: String,
}

impl TestCase {
    pub fn new(id: impl Into<String>, input: impl Into<String>, expected: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            input: input.into(),
            expected_output: expected.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];
}

/// One (problem, buggy code, failed test, Code Diff, fixed code) tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairInstance {
    pub id: String,
    pub problem_id: String,
    pub user_id: String,
    pub problem_statement: String,
    pub buggy_code: String,
    pub failed_test: TestCase,
    #[serde(with = "rendered_annotation")]
    pub diff_label: DiffAnnotation,
    pub fixed_code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

/// Serializes a [`DiffAnnotation`] as its rendered Code Diff text.
pub(crate) mod rendered_annotation {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::diffkit::{AnnotatedLine, DiffAnnotation, Marker};

    pub fn serialize<S: Serializer>(ann: &DiffAnnotation, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&ann.render())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DiffAnnotation, D::Error> {
        let text = String::deserialize(d)?;
        from_rendered(&text).map_err(D::Error::custom)
    }

    pub fn from_rendered(text: &str) -> Result<DiffAnnotation, String> {
        if text.is_empty() {
            return Ok(DiffAnnotation::default());
        }
        let lines = text
            .split('\n')
            .enumerate()
            .map(|(i, line)| {
                let marker = match line.chars().next() {
                    Some('-') => Marker::Buggy,
                    Some(' ') => Marker::Keep,
                    _ => return Err(format!("line {} lacks a Code Diff prefix", i + 1)),
                };
                Ok(AnnotatedLine {
                    marker,
                    text: line[1..].to_string(),
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(DiffAnnotation { lines })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffkit::{encode_code_diff, line_diff};

    #[test]
    fn instance_serializes_code_diff_as_text() {
        let buggy = "a = 1\n\nb = 2\n";
        let fixed = "a = 1\n\nb = 3\n";
        let inst = RepairInstance {
            id: "p1:u1:s1:s2".into(),
            problem_id: "p1".into(),
            user_id: "u1".into(),
            problem_statement: "Print b.".into(),
            buggy_code: buggy.into(),
            failed_test: TestCase::new("0", "", "3\n"),
            diff_label: encode_code_diff(buggy, &line_diff(buggy, fixed)).unwrap(),
            fixed_code: fixed.into(),
            split: Some(Split::Test),
        };
        let json = serde_json::to_value(&inst).unwrap();
        assert_eq!(json["diff_label"], " a = 1\n \n-b = 2");
        assert_eq!(json["split"], "test");
        assert_eq!(json["failed_test"]["expected_output"], "3\n");
        let back: RepairInstance = serde_json::from_value(json).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn unprefixed_code_diff_is_rejected() {
        assert!(rendered_annotation::from_rendered(" a\nb").is_err());
    }
}
