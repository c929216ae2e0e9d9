use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TrainPrepError;
use crate::corpus::RepairInstance;
use crate::diffkit::DiffAnnotation;
use crate::modelgw::{locate, Gateway};
use crate::seed::keyed_rng;
use crate::trace::TraceBundle;

/// A D2 instance with the locator's own prediction next to the gold label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relabeled {
    pub instance: RepairInstance,
    /// Rendered predicted Code Diff; `None` when localization failed.
    pub predicted: Option<String>,
    /// Why localization failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl Relabeled {
    pub fn predicted_annotation(&self) -> Option<DiffAnnotation> {
        self.predicted
            .as_deref()
            .and_then(|text| crate::corpus::rendered_annotation::from_rendered(text).ok())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridSplit {
    pub k: f64,
    pub d1: Vec<RepairInstance>,
    pub d2_prime: Vec<Relabeled>,
}

/// Number of instances trained on gold labels only: round(n / (1 + k)).
pub fn d1_size(n: usize, k: f64) -> usize {
    ((n as f64 / (1.0 + k)).round() as usize).min(n)
}

/// Seeded 1:k partition of `instances`; every D2 instance is relabeled by
/// the locator behind `gateway`.
pub fn make_hybrid_split(
    instances: &[RepairInstance],
    k: f64,
    gateway: &dyn Gateway,
    bundle_for: &(dyn Fn(&RepairInstance) -> TraceBundle + Sync),
    seed: u64,
    language: &str,
) -> Result<HybridSplit, TrainPrepError> {
    if !(k.is_finite() && k > 0.0) {
        return Err(TrainPrepError::BadRatio(k));
    }
    let mut order: Vec<&RepairInstance> = instances.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    order.shuffle(&mut keyed_rng(seed, &["hybrid"]));
    let n1 = d1_size(order.len(), k);
    let (d1, d2) = order.split_at(n1);

    let mut d1: Vec<RepairInstance> = d1.iter().map(|i| (*i).clone()).collect();
    d1.sort_by(|a, b| a.id.cmp(&b.id));
    let mut d2_prime: Vec<Relabeled> = d2
        .par_iter()
        .map(|inst| {
            let located = locate(gateway, inst, &bundle_for(inst), language);
            let (predicted, failure) = match located.result {
                Ok(parsed) => (Some(parsed.annotation.render()), None),
                Err(err) => (None, Some(err.to_string())),
            };
            Relabeled {
                instance: (*inst).clone(),
                predicted,
                failure,
            }
        })
        .collect();
    d2_prime.sort_by(|a, b| a.instance.id.cmp(&b.instance.id));
    Ok(HybridSplit { k, d1, d2_prime })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_rule() {
        assert_eq!(d1_size(10, 4.0), 2);
        assert_eq!(d1_size(10, 1.0), 5);
        assert_eq!(d1_size(7, 2.0), 2);
        assert_eq!(d1_size(0, 1.0), 0);
        assert_eq!(d1_size(3, 1.0), 2);
    }
}
