//! On-disk submission archive.
//!
//! ```text
//! <root>/submissions/<id>.py     source
//! <root>/submissions/<id>.json   {"user_id", "problem_id", "timestamp", "verdict"}
//! <root>/problems/<pid>/statement.txt
//! <root>/problems/<pid>/tests/<tid>.in
//! <root>/problems/<pid>/tests/<tid>.out
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::split::SplitDataset;
use super::{CorpusError, RepairInstance, Submission, SubmissionVerdict, TestCase};
use crate::jsonl::{read_jsonl, to_jsonl_string, write_atomic, write_json};

/// Metadata sidecar stored next to each submission source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmissionMeta {
    pub user_id: String,
    pub problem_id: String,
    pub timestamp: u64,
    pub verdict: SubmissionVerdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Problem {
    pub statement: String,
    pub tests: Vec<TestCase>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Archive {
    /// Sorted by submission id.
    pub submissions: Vec<Submission>,
    pub problems: BTreeMap<String, Problem>,
}

fn archive_err(path: &Path, message: impl Into<String>) -> CorpusError {
    CorpusError::Archive {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn read_text(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|e| archive_err(path, e.to_string()))
}

fn sorted_entries(dir: &Path) -> Result<Vec<std::path::PathBuf>, CorpusError> {
    let mut paths = fs::read_dir(dir)
        .map_err(|e| archive_err(dir, e.to_string()))?
        .map(|entry| entry.map(|e| e.path()))
        .collect::<Result<Vec<_>, _>>()?;
    paths.sort();
    Ok(paths)
}

pub fn load_archive(root: &Path) -> Result<Archive, CorpusError> {
    let mut archive = Archive::default();

    for path in sorted_entries(&root.join("problems"))? {
        if !path.is_dir() {
            continue;
        }
        let pid = path.file_name().unwrap().to_string_lossy().into_owned();
        let statement = read_text(&path.join("statement.txt"))?;
        let mut tests = Vec::new();
        for input in sorted_entries(&path.join("tests"))? {
            if input.extension().is_none_or(|e| e != "in") {
                continue;
            }
            let tid = input.file_stem().unwrap().to_string_lossy().into_owned();
            let expected = read_text(&input.with_extension("out"))?;
            tests.push(TestCase::new(tid, read_text(&input)?, expected));
        }
        if tests.is_empty() {
            return Err(archive_err(&path, "problem has no tests"));
        }
        archive.problems.insert(pid, Problem { statement, tests });
    }

    let mut seen_order = BTreeSet::new();
    for meta_path in sorted_entries(&root.join("submissions"))? {
        if meta_path.extension().is_none_or(|e| e != "json") {
            continue;
        }
        let meta: SubmissionMeta = serde_json::from_str(&read_text(&meta_path)?)
            .map_err(|e| archive_err(&meta_path, e.to_string()))?;
        let source_path = meta_path.with_extension("py");
        let source = read_text(&source_path)?;
        if source.trim().is_empty() {
            return Err(archive_err(&source_path, "empty submission source"));
        }
        if !archive.problems.contains_key(&meta.problem_id) {
            return Err(archive_err(
                &meta_path,
                format!("unknown problem {}", meta.problem_id),
            ));
        }
        let key = (meta.user_id.clone(), meta.problem_id.clone(), meta.timestamp);
        if !seen_order.insert(key) {
            return Err(archive_err(
                &meta_path,
                "timestamp repeats for this user and problem",
            ));
        }
        archive.submissions.push(Submission {
            id: meta_path.file_stem().unwrap().to_string_lossy().into_owned(),
            user_id: meta.user_id,
            problem_id: meta.problem_id,
            timestamp: meta.timestamp,
            source,
            verdict: meta.verdict,
        });
    }
    Ok(archive)
}

/// Writes an archive in the layout [`load_archive`] reads.
pub fn write_archive(root: &Path, archive: &Archive) -> Result<(), CorpusError> {
    for (pid, problem) in &archive.problems {
        let dir = root.join("problems").join(pid);
        fs::create_dir_all(dir.join("tests"))?;
        fs::write(dir.join("statement.txt"), &problem.statement)?;
        for test in &problem.tests {
            fs::write(dir.join("tests").join(format!("{}.in", test.id)), &test.input)?;
            fs::write(dir.join("tests").join(format!("{}.out", test.id)), &test.expected_output)?;
        }
    }
    let subs = root.join("submissions");
    fs::create_dir_all(&subs)?;
    for sub in &archive.submissions {
        let meta = SubmissionMeta {
            user_id: sub.user_id.clone(),
            problem_id: sub.problem_id.clone(),
            timestamp: sub.timestamp,
            verdict: sub.verdict,
        };
        fs::write(subs.join(format!("{}.py", sub.id)), &sub.source)?;
        let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        fs::write(subs.join(format!("{}.json", sub.id)), json)?;
    }
    Ok(())
}

/// Test suites keyed by problem id.
pub type Suites = BTreeMap<String, Vec<TestCase>>;

/// Writes `instances.jsonl`, `manifest.json` and `suites.json` (the full test
/// suite of every problem that kept an instance) into `dir`.
pub fn write_dataset(
    dir: &Path,
    dataset: &SplitDataset,
    problems: &BTreeMap<String, Problem>,
) -> Result<(), CorpusError> {
    fs::create_dir_all(dir)?;
    let lines = to_jsonl_string(&dataset.instances).map_err(std::io::Error::other)?;
    write_atomic(&dir.join("instances.jsonl"), lines.as_bytes())?;
    write_json(&dir.join("manifest.json"), &dataset.manifest)?;
    let suites: Suites = dataset
        .manifest
        .assignment
        .keys()
        .filter_map(|pid| problems.get(pid).map(|p| (pid.clone(), p.tests.clone())))
        .collect();
    write_json(&dir.join("suites.json"), &suites)?;
    Ok(())
}

/// Reads a dataset directory. Without `suites.json` each instance's failed
/// test is its problem's only test.
pub fn load_dataset(dir: &Path) -> Result<(Vec<RepairInstance>, Suites), CorpusError> {
    let path = if dir.is_file() {
        dir.to_path_buf()
    } else {
        dir.join("instances.jsonl")
    };
    let instances: Vec<RepairInstance> =
        read_jsonl(&path).map_err(|e| archive_err(&path, e.to_string()))?;
    let suites_path = path.with_file_name("suites.json");
    let suites = if suites_path.exists() {
        serde_json::from_str(&read_text(&suites_path)?)
            .map_err(|e| archive_err(&suites_path, e.to_string()))?
    } else {
        let mut suites = Suites::new();
        for inst in &instances {
            let suite: &mut Vec<TestCase> = suites.entry(inst.problem_id.clone()).or_default();
            if !suite.iter().any(|t| t.id == inst.failed_test.id) {
                suite.push(inst.failed_test.clone());
            }
        }
        suites
    };
    Ok((instances, suites))
}
