use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{CorpusError, RepairInstance, Split};
use crate::seed::keyed_rng;

/// Problem-level split proportions and per-problem instance caps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Relative share of problems for train, val, test.
    pub ratio: [u32; 3],
    /// Maximum instances kept per problem in train, val, test.
    pub caps: [usize; 3],
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            ratio: [8, 1, 1],
            caps: [150, 10, 20],
        }
    }
}

impl SplitConfig {
    fn cap(&self, split: Split) -> usize {
        self.caps[split as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    /// Instances per split after capping.
    pub split_counts: BTreeMap<Split, usize>,
    /// Problems per split.
    pub problem_counts: BTreeMap<Split, usize>,
    /// Instances per problem after capping.
    pub per_problem: BTreeMap<String, usize>,
    pub assignment: BTreeMap<String, Split>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitDataset {
    /// Retained instances with `split` set, ordered by split, problem, id.
    pub instances: Vec<RepairInstance>,
    pub manifest: DatasetManifest,
}

/// Assigns whole problems to train/val/test by a seeded shuffle, then caps
/// the instances of each problem by seeded subsampling.
pub fn split_and_cap(
    instances: Vec<RepairInstance>,
    seed: u64,
    config: &SplitConfig,
) -> Result<SplitDataset, CorpusError> {
    let mut by_problem: BTreeMap<String, Vec<RepairInstance>> = BTreeMap::new();
    for inst in instances {
        by_problem.entry(inst.problem_id.clone()).or_default().push(inst);
    }
    let n = by_problem.len();
    if n < 3 {
        return Err(CorpusError::TooFewProblems(n));
    }

    let [train_sizes, val_sizes, test_sizes] = split_sizes(n, config.ratio);
    debug_assert_eq!(train_sizes + val_sizes + test_sizes, n);
    let mut problems: Vec<String> = by_problem.keys().cloned().collect();
    problems.shuffle(&mut keyed_rng(seed, &["split"]));

    let mut manifest = DatasetManifest {
        seed,
        ..DatasetManifest::default()
    };
    for (idx, problem) in problems.iter().enumerate() {
        let split = if idx < train_sizes {
            Split::Train
        } else if idx < train_sizes + val_sizes {
            Split::Val
        } else {
            Split::Test
        };
        manifest.assignment.insert(problem.clone(), split);
    }

    let mut retained = Vec::new();
    for (problem, mut group) in by_problem {
        let split = manifest.assignment[&problem];
        group.sort_by(|a, b| a.id.cmp(&b.id));
        let cap = config.cap(split);
        if group.len() > cap {
            group.shuffle(&mut keyed_rng(seed, &["cap", &problem]));
            group.truncate(cap);
            group.sort_by(|a, b| a.id.cmp(&b.id));
        }
        manifest.per_problem.insert(problem.clone(), group.len());
        *manifest.split_counts.entry(split).or_default() += group.len();
        *manifest.problem_counts.entry(split).or_default() += 1;
        retained.extend(group.into_iter().map(|mut inst| {
            inst.split = Some(split);
            inst
        }));
    }
    for split in Split::ALL {
        manifest.split_counts.entry(split).or_default();
    }
    retained.sort_by(|a, b| (a.split, &a.problem_id, &a.id).cmp(&(b.split, &b.problem_id, &b.id)));
    Ok(SplitDataset {
        instances: retained,
        manifest,
    })
}

/// Problem counts per split: val and test get their rounded share (at least
/// one each), train takes the rest.
fn split_sizes(n: usize, ratio: [u32; 3]) -> [usize; 3] {
    let total: u32 = ratio.iter().sum::<u32>().max(1);
    let share = |r: u32| ((n as f64 * r as f64 / total as f64).round() as usize).max(1);
    let mut val = share(ratio[1]);
    let mut test = share(ratio[2]);
    while val + test > n - 1 {
        if val >= test && val > 1 {
            val -= 1;
        } else {
            test -= 1;
        }
    }
    [n - val - test, val, test]
}
