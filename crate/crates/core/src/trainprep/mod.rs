//! Training data for the locator and the modifier: supervised records, the
//! hybrid gold/predicted-label split, preference pairs mined from judged
//! candidates, and the DPO-Positive objective as a plain function.

mod dpo;
mod hybrid;

pub use dpo::{
    dpo_positive_grad, dpo_positive_loss, softplus, DpoError, DpoGradient, DpoPInputs,
    DEFAULT_BETA, DEFAULT_LAMBDA,
};
pub use hybrid::{d1_size, make_hybrid_split, HybridSplit, Relabeled};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{RepairInstance, Suites};
use crate::diffkit::consistency;
use crate::judge::{Judge, RepairOutcome};
use crate::promptkit::{render_repair, render_repair_fallback, self_debug_prompt};
use crate::trace::TraceBundle;

#[derive(Debug, Error)]
pub enum TrainPrepError {
    #[error("hybrid ratio k must be a positive number, got {0}")]
    BadRatio(f64),
    #[error("instance {0}: {1}")]
    Prompt(String, crate::promptkit::PromptError),
}

/// Locator training pair: self-debug prompt and the gold Code Diff.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocatorRecord {
    pub instance_id: String,
    pub prompt: String,
    pub target: String,
    /// False when the prompt carries the trace-unavailable sentinel.
    pub trace_available: bool,
}

pub fn export_locator_records(
    items: &[(RepairInstance, TraceBundle)],
    language: &str,
) -> Vec<LocatorRecord> {
    let mut records: Vec<LocatorRecord> = items
        .iter()
        .map(|(inst, bundle)| LocatorRecord {
            instance_id: inst.id.clone(),
            prompt: self_debug_prompt(&inst.problem_statement, &inst.buggy_code, bundle, language),
            target: inst.diff_label.render(),
            trace_available: bundle.has_events(),
        })
        .collect();
    records.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    records
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    D1,
    D2Gold,
    D2Pred,
}

/// Modifier training pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModifierRecord {
    pub instance_id: String,
    pub prompt: String,
    pub target: String,
    pub origin: Origin,
}

fn gold_record(inst: &RepairInstance, origin: Origin, language: &str) -> Result<ModifierRecord, TrainPrepError> {
    let prompt = render_repair(&inst.problem_statement, &inst.buggy_code, &inst.diff_label, language)
        .map_err(|e| TrainPrepError::Prompt(inst.id.clone(), e))?;
    Ok(ModifierRecord {
        instance_id: inst.id.clone(),
        prompt,
        target: inst.fixed_code.clone(),
        origin,
    })
}

/// One gold-label record per D1 instance; a gold-label and a
/// predicted-label record per D2 instance. A failed prediction uses the
/// instruction prompt.
pub fn export_modifier_records(
    split: &HybridSplit,
    language: &str,
) -> Result<Vec<ModifierRecord>, TrainPrepError> {
    let mut records = Vec::with_capacity(split.d1.len() + 2 * split.d2_prime.len());
    for inst in &split.d1 {
        records.push(gold_record(inst, Origin::D1, language)?);
    }
    for item in &split.d2_prime {
        let inst = &item.instance;
        records.push(gold_record(inst, Origin::D2Gold, language)?);
        let prompt = match item.predicted_annotation() {
            Some(ann) => render_repair(&inst.problem_statement, &inst.buggy_code, &ann, language)
                .unwrap_or_else(|_| render_repair_fallback(&inst.problem_statement, &inst.buggy_code, language)),
            None => render_repair_fallback(&inst.problem_statement, &inst.buggy_code, language),
        };
        records.push(ModifierRecord {
            instance_id: inst.id.clone(),
            prompt,
            target: inst.fixed_code.clone(),
            origin: Origin::D2Pred,
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateJudgement {
    pub code: String,
    pub outcome: RepairOutcome,
    /// Plain consistency against the buggy code (a verbatim copy scores 1).
    pub consistency: f64,
}

impl CandidateJudgement {
    /// Passes the whole suite and keeps every previously passing test.
    pub fn is_correct(&self) -> bool {
        self.outcome.fully_correct() && !self.outcome.regressed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub instance_id: String,
    /// Location-aware repair prompt with the gold Code Diff.
    pub prompt: String,
    pub chosen: CandidateJudgement,
    pub rejected: CandidateJudgement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceMeta {
    pub consistency_chosen: f64,
    pub consistency_rejected: f64,
}

/// Export form of a preference pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRecord {
    pub instance_id: String,
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
    pub meta: PreferenceMeta,
}

impl From<&PreferencePair> for PreferenceRecord {
    fn from(pair: &PreferencePair) -> Self {
        Self {
            instance_id: pair.instance_id.clone(),
            prompt: pair.prompt.clone(),
            chosen: pair.chosen.code.clone(),
            rejected: pair.rejected.code.clone(),
            meta: PreferenceMeta {
                consistency_chosen: pair.chosen.consistency,
                consistency_rejected: pair.rejected.consistency,
            },
        }
    }
}

/// Picks the most consistent correct candidate and the least consistent
/// incorrect one. Ties go to the earlier candidate.
pub fn select_preference(judged: &[CandidateJudgement]) -> Option<(usize, usize)> {
    let mut chosen: Option<usize> = None;
    let mut rejected: Option<usize> = None;
    for (i, cand) in judged.iter().enumerate() {
        if cand.is_correct() {
            if chosen.is_none_or(|c| cand.consistency > judged[c].consistency) {
                chosen = Some(i);
            }
        } else if rejected.is_none_or(|r| cand.consistency < judged[r].consistency) {
            rejected = Some(i);
        }
    }
    chosen.zip(rejected)
}

/// Judges each instance's candidates on its problem's suite and forms at
/// most one preference pair per instance.
pub fn mine_preference_pairs(
    instances: &[RepairInstance],
    candidates: &BTreeMap<String, Vec<String>>,
    suites: &Suites,
    judge: &Judge,
    language: &str,
) -> Vec<PreferencePair> {
    let mut pairs: Vec<PreferencePair> = instances
        .par_iter()
        .filter_map(|inst| {
            let cands = candidates.get(&inst.id)?;
            if cands.len() < 2 {
                return None;
            }
            let tests = suites.get(&inst.problem_id)?;
            let before = judge.run_suite(&inst.buggy_code, tests).ok()?;
            let judged: Vec<CandidateJudgement> = cands
                .iter()
                .filter_map(|code| {
                    let outcome = judge.outcome(&before, Some(code), tests).ok()?;
                    Some(CandidateJudgement {
                        code: code.clone(),
                        outcome,
                        consistency: consistency(&inst.buggy_code, code),
                    })
                })
                .collect();
            let (c, r) = select_preference(&judged)?;
            let prompt =
                render_repair(&inst.problem_statement, &inst.buggy_code, &inst.diff_label, language).ok()?;
            Some(PreferencePair {
                instance_id: inst.id.clone(),
                prompt,
                chosen: judged[c].clone(),
                rejected: judged[r].clone(),
            })
        })
        .collect();
    pairs.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    pairs
}
