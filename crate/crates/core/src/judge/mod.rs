//! Test-suite execution and the evaluation metrics: accuracy, improvement
//! rate and failed-repair rate.

mod metrics;

pub use metrics::{accuracy, failed_repair_rate, improve_rate, MetricsSummary, OutcomeRecord};

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TestCase;
use crate::exec::{outputs_match, ExecBackend, Execution, Limits};
use crate::trace::ExitStatus;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum JudgeError {
    #[error("test suite is empty")]
    EmptySuite,
    #[error("improvement rate is undefined: the buggy program failed no test")]
    NothingToImprove,
    #[error("metric over an empty outcome list")]
    NoOutcomes,
    #[error("verdict sets cover different tests")]
    SuiteMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestVerdict {
    Pass,
    Fail,
    Timeout,
    Crash,
}

impl TestVerdict {
    pub fn from_execution(run: &Execution, expected: &str) -> Self {
        match &run.exit_status {
            ExitStatus::Timeout => TestVerdict::Timeout,
            ExitStatus::Exception { .. } => TestVerdict::Crash,
            ExitStatus::Ok if outputs_match(&run.actual_output, expected) => TestVerdict::Pass,
            ExitStatus::Ok => TestVerdict::Fail,
        }
    }

    pub fn is_pass(self) -> bool {
        self == TestVerdict::Pass
    }
}

/// Per-test verdicts of one program over a problem's whole suite.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VerdictSet {
    pub verdicts: BTreeMap<String, TestVerdict>,
}

impl VerdictSet {
    pub fn new(verdicts: BTreeMap<String, TestVerdict>) -> Self {
        Self { verdicts }
    }

    /// Every test in `tests` judged `Fail`, used when no program exists.
    pub fn all_failing<'a>(ids: impl IntoIterator<Item = &'a str>) -> Self {
        Self {
            verdicts: ids
                .into_iter()
                .map(|id| (id.to_string(), TestVerdict::Fail))
                .collect(),
        }
    }

    pub fn passed_set(&self) -> BTreeSet<&str> {
        self.verdicts
            .iter()
            .filter(|(_, v)| v.is_pass())
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn failed_set(&self) -> BTreeSet<&str> {
        self.verdicts
            .iter()
            .filter(|(_, v)| !v.is_pass())
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn all_pass(&self) -> bool {
        !self.verdicts.is_empty() && self.verdicts.values().all(|v| v.is_pass())
    }

    pub fn len(&self) -> usize {
        self.verdicts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verdicts.is_empty()
    }
}

/// Verdicts of the buggy program and of a candidate fix on the same suite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairOutcome {
    pub before: VerdictSet,
    pub after: VerdictSet,
    /// Tests the buggy program failed.
    pub m: usize,
    /// Of those, tests the candidate passes.
    pub n: usize,
    /// Some test the buggy program passed now fails.
    pub regressed: bool,
}

impl RepairOutcome {
    pub fn new(before: VerdictSet, after: VerdictSet) -> Result<Self, JudgeError> {
        if !before.verdicts.keys().eq(after.verdicts.keys()) {
            return Err(JudgeError::SuiteMismatch);
        }
        let failed_before = before.failed_set();
        let passed_after = after.passed_set();
        let m = failed_before.len();
        let n = failed_before.intersection(&passed_after).count();
        let regressed = !before.passed_set().is_subset(&passed_after);
        Ok(Self {
            before,
            after,
            m,
            n,
            regressed,
        })
    }

    pub fn fully_correct(&self) -> bool {
        self.after.all_pass()
    }
}

/// Runs programs against test suites, one fresh process per test.
pub struct Judge {
    backend: Arc<dyn ExecBackend>,
    limits: Limits,
    pool: rayon::ThreadPool,
}

impl Judge {
    pub fn new(backend: Arc<dyn ExecBackend>, limits: Limits, workers: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .thread_name(|i| format!("judge-{i}"))
            .build()
            .expect("failed to build judge thread pool");
        Self {
            backend,
            limits,
            pool,
        }
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    pub fn backend(&self) -> &dyn ExecBackend {
        self.backend.as_ref()
    }

    pub fn execute(&self, source: &str, test: &TestCase) -> Execution {
        self.backend.execute(source, &test.input, &self.limits)
    }

    pub fn self_check(&self, source: &str, test: &TestCase) -> TestVerdict {
        TestVerdict::from_execution(&self.execute(source, test), &test.expected_output)
    }

    pub fn run_suite(&self, source: &str, tests: &[TestCase]) -> Result<VerdictSet, JudgeError> {
        if tests.is_empty() {
            return Err(JudgeError::EmptySuite);
        }
        let verdicts = self.pool.install(|| {
            tests
                .par_iter()
                .map(|t| (t.id.clone(), self.self_check(source, t)))
                .collect::<BTreeMap<_, _>>()
        });
        Ok(VerdictSet { verdicts })
    }

    /// Judges `candidate` (or the absence of one) against the suite the
    /// `before` verdicts were taken on.
    pub fn outcome(
        &self,
        before: &VerdictSet,
        candidate: Option<&str>,
        tests: &[TestCase],
    ) -> Result<RepairOutcome, JudgeError> {
        let after = match candidate {
            Some(code) => self.run_suite(code, tests)?,
            None => VerdictSet::all_failing(tests.iter().map(|t| t.id.as_str())),
        };
        RepairOutcome::new(before.clone(), after)
    }
}
