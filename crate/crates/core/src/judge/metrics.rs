use serde::{Deserialize, Serialize};

use super::{JudgeError, RepairOutcome, VerdictSet};

/// Share of previously failing tests the candidate now passes, or 0 when a
/// previously passing test regressed.
pub fn improve_rate(outcome: &RepairOutcome) -> Result<f64, JudgeError> {
    if outcome.m == 0 {
        return Err(JudgeError::NothingToImprove);
    }
    if outcome.regressed {
        return Ok(0.0);
    }
    Ok(outcome.n as f64 / outcome.m as f64)
}

/// Fraction of candidates that broke a test the buggy program passed.
pub fn failed_repair_rate(outcomes: &[RepairOutcome]) -> Result<f64, JudgeError> {
    if outcomes.is_empty() {
        return Err(JudgeError::NoOutcomes);
    }
    let regressed = outcomes.iter().filter(|o| o.regressed).count();
    Ok(regressed as f64 / outcomes.len() as f64)
}

/// Fraction of candidates passing the entire suite.
pub fn accuracy(outcomes: &[RepairOutcome]) -> Result<f64, JudgeError> {
    if outcomes.is_empty() {
        return Err(JudgeError::NoOutcomes);
    }
    let correct = outcomes.iter().filter(|o| o.fully_correct()).count();
    Ok(correct as f64 / outcomes.len() as f64)
}

/// One persisted judging result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub instance_id: String,
    pub before: VerdictSet,
    pub after: VerdictSet,
    pub improve: f64,
    pub regressed: bool,
    /// Reported consistency of the candidate against the buggy code.
    #[serde(default)]
    pub consistency: f64,
}

impl OutcomeRecord {
    pub fn outcome(&self) -> Result<RepairOutcome, JudgeError> {
        RepairOutcome::new(self.before.clone(), self.after.clone())
    }
}

/// Aggregate metrics in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub acc: f64,
    pub improve: f64,
    pub consistency: f64,
    pub fr: f64,
}

impl MetricsSummary {
    pub fn from_records(records: &[OutcomeRecord]) -> Result<Self, JudgeError> {
        if records.is_empty() {
            return Err(JudgeError::NoOutcomes);
        }
        let outcomes = records
            .iter()
            .map(OutcomeRecord::outcome)
            .collect::<Result<Vec<_>, _>>()?;
        let count = records.len() as f64;
        Ok(Self {
            acc: 100.0 * accuracy(&outcomes)?,
            improve: 100.0 * records.iter().map(|r| r.improve).sum::<f64>() / count,
            consistency: 100.0 * records.iter().map(|r| r.consistency).sum::<f64>() / count,
            fr: 100.0 * failed_repair_rate(&outcomes)?,
        })
    }
}
