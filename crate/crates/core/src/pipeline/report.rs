use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::diffkit::DiffAnnotation;
use crate::judge::{JudgeError, MetricsSummary, OutcomeRecord};
use crate::promptkit::TemplateId;

/// Localization quality of a predicted Code Diff against the gold one, by
/// comparing marked line sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Localization {
    /// Same marked lines.
    AL,
    /// Overlapping but different.
    PL,
    /// Disjoint.
    EL,
    /// Nothing marked, or no usable prediction.
    NL,
}

pub fn classify_localization(gold: &DiffAnnotation, predicted: Option<&DiffAnnotation>) -> Localization {
    let Some(predicted) = predicted else {
        return Localization::NL;
    };
    let predicted = predicted.buggy_set();
    if predicted.is_empty() {
        return Localization::NL;
    }
    let gold = gold.buggy_set();
    if predicted == gold {
        Localization::AL
    } else if predicted.intersection(&gold).next().is_some() {
        Localization::PL
    } else {
        Localization::EL
    }
}

/// Everything recorded about one instance in a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub instance_id: String,
    /// Template of the call that produced the candidate.
    pub template: TemplateId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub localization: Option<Localization>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_diff: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<String>,
    /// `category: message` of the first failure, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    /// Rows for instances whose buggy program fails no test carry no metric.
    #[serde(default)]
    pub excluded: bool,
    pub record: OutcomeRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub mode: String,
    pub acc: f64,
    pub improve: f64,
    pub consistency: f64,
    pub fr: f64,
    pub counted: usize,
    pub excluded: usize,
    /// Set-comparison proxy for localization quality; present when the run
    /// had a locator stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub localization_automated: Option<BTreeMap<Localization, usize>>,
    pub rows: Vec<InstanceRow>,
}

impl Report {
    /// Folds rows (sorted by instance id) into aggregates.
    pub fn from_rows(mode: &str, mut rows: Vec<InstanceRow>) -> Result<Self, JudgeError> {
        rows.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
        let records: Vec<OutcomeRecord> = rows
            .iter()
            .filter(|r| !r.excluded)
            .map(|r| r.record.clone())
            .collect();
        let summary = MetricsSummary::from_records(&records)?;
        let has_locator = rows.iter().any(|r| r.localization.is_some());
        let localization_automated = has_locator.then(|| {
            let mut tally: BTreeMap<Localization, usize> =
                [Localization::AL, Localization::PL, Localization::EL, Localization::NL]
                    .into_iter()
                    .map(|l| (l, 0))
                    .collect();
            for row in rows.iter().filter(|r| !r.excluded) {
                if let Some(l) = row.localization {
                    *tally.get_mut(&l).unwrap() += 1;
                }
            }
            tally
        });
        Ok(Self {
            mode: mode.to_string(),
            acc: summary.acc,
            improve: summary.improve,
            consistency: summary.consistency,
            fr: summary.fr,
            counted: records.len(),
            excluded: rows.len() - records.len(),
            localization_automated,
            rows,
        })
    }

    pub fn summary(&self) -> MetricsSummary {
        MetricsSummary {
            acc: self.acc,
            improve: self.improve,
            consistency: self.consistency,
            fr: self.fr,
        }
    }
}
