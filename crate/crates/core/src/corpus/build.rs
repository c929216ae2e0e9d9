use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rayon::prelude::*;
use tracing::debug;

use super::archive::Problem;
use super::bleu::code_bleu;
use super::{RepairInstance, Submission, SubmissionVerdict};
use crate::diffkit::{encode_code_diff, line_diff};
use crate::judge::Judge;
use crate::seed::keyed_rng;

/// Pairs must be strictly more similar than this.
pub const SIMILARITY_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingConfig {
    pub threshold: f64,
    pub seed: u64,
}

impl Default for PairingConfig {
    fn default() -> Self {
        Self {
            threshold: SIMILARITY_THRESHOLD,
            seed: 0,
        }
    }
}

struct Candidate<'a> {
    rejected: &'a Submission,
    accepted: &'a Submission,
    score: f64,
}

impl Candidate<'_> {
    /// Higher score first, then earlier accepted submission, then ids.
    fn preference(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then(self.accepted.timestamp.cmp(&other.accepted.timestamp))
            .then(self.accepted.id.cmp(&other.accepted.id))
            .then(self.rejected.id.cmp(&other.rejected.id))
    }
}

/// Builds at most one repair instance per (user, problem).
///
/// A rejected submission pairs with any later accepted one; pairs must exceed
/// the similarity threshold on comment-stripped code, and the most similar
/// pair wins. The failed test is drawn at random from the tests the buggy
/// code fails and the fix passes, keyed by (seed, user, problem).
pub fn build_pairs(
    submissions: &[Submission],
    problems: &BTreeMap<String, Problem>,
    judge: &Judge,
    config: &PairingConfig,
) -> Vec<RepairInstance> {
    let mut groups: BTreeMap<(&str, &str), Vec<&Submission>> = BTreeMap::new();
    for sub in submissions {
        groups
            .entry((sub.user_id.as_str(), sub.problem_id.as_str()))
            .or_default()
            .push(sub);
    }

    let groups: Vec<_> = groups.into_iter().collect();
    let mut instances: Vec<RepairInstance> = groups
        .par_iter()
        .filter_map(|((user, problem_id), subs)| {
            let best = select_pair(subs, config.threshold)?;
            let problem = problems.get(*problem_id)?;
            make_instance(user, problem_id, problem, &best, judge, config.seed)
        })
        .collect();
    instances.sort_by(|a, b| (&a.problem_id, &a.id).cmp(&(&b.problem_id, &b.id)));
    instances
}

fn select_pair<'a>(subs: &[&'a Submission], threshold: f64) -> Option<Candidate<'a>> {
    let rejected = subs.iter().filter(|s| s.verdict == SubmissionVerdict::Rejected);
    let accepted: Vec<&&Submission> = subs
        .iter()
        .filter(|s| s.verdict == SubmissionVerdict::Accepted)
        .collect();
    rejected
        .flat_map(|r| {
            accepted
                .iter()
                .filter(move |a| r.timestamp < a.timestamp)
                .map(move |a| Candidate {
                    rejected: r,
                    accepted: a,
                    score: code_bleu(&r.source, &a.source),
                })
        })
        .filter(|c| c.score > threshold)
        .min_by(|a, b| a.preference(b))
}

fn make_instance(
    user: &str,
    problem_id: &str,
    problem: &Problem,
    pair: &Candidate<'_>,
    judge: &Judge,
    seed: u64,
) -> Option<RepairInstance> {
    let buggy = &pair.rejected.source;
    let fixed = &pair.accepted.source;
    let before = judge.run_suite(buggy, &problem.tests).ok()?;
    let after = judge.run_suite(fixed, &problem.tests).ok()?;
    let failing: Vec<_> = problem
        .tests
        .iter()
        .filter(|t| !before.verdicts[&t.id].is_pass() && after.verdicts[&t.id].is_pass())
        .collect();
    let mut rng = keyed_rng(seed, &["failed-test", user, problem_id]);
    let Some(test) = failing.choose(&mut rng) else {
        debug!(user, problem_id, "selected pair has no test separating buggy from fixed");
        return None;
    };
    let diff_label = encode_code_diff(buggy, &line_diff(buggy, fixed))
        .expect("diff computed from the same buggy code");
    Some(RepairInstance {
        id: format!("{problem_id}:{user}:{}:{}", pair.rejected.id, pair.accepted.id),
        problem_id: problem_id.to_string(),
        user_id: user.to_string(),
        problem_statement: problem.statement.clone(),
        buggy_code: buggy.clone(),
        failed_test: (*test).clone(),
        diff_label,
        fixed_code: fixed.clone(),
        split: None,
    })
}
