//! Ranking and calibration metrics.
//!
//! AUC is computed exactly with integer pair counting (ties count half),
//! so two runs of the same model produce bit-identical metric values and
//! tests can compare against a brute-force oracle with `==`.

use crate::error::{EktfError, Result};
use crate::objective::loss::ctr_loss;

/// Area under the ROC curve of `scores` against binary `labels`.
///
/// Equals the probability that a uniformly random positive outranks a
/// uniformly random negative, with ties worth 1/2. Errors when either
/// class is absent (the value would be undefined) or a score is NaN.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(EktfError::Shape(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(EktfError::Metric("AUC of an empty set is undefined".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(EktfError::Metric("AUC input contains NaN scores".into()));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count() as u128;
    let neg = labels.len() as u128 - pos;
    if pos == 0 || neg == 0 {
        return Err(EktfError::Metric(
            "AUC is undefined when all labels are the same class".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Walk tie groups in ascending score order. Each positive in a group
    // wins against every negative strictly below and half-wins against
    // negatives inside the group; count doubled wins to stay in integers.
    let mut doubled_wins: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut g = 0;
    while g < order.len() {
        let mut end = g + 1;
        while end < order.len() && scores[order[end]] == scores[order[g]] {
            end += 1;
        }
        let group_pos = order[g..end].iter().filter(|&&i| labels[i] == 1).count() as u128;
        let group_neg = (end - g) as u128 - group_pos;
        doubled_wins += group_pos * (2 * neg_below + group_neg);
        neg_below += group_neg;
        g = end;
    }
    Ok(doubled_wins as f64 / (2 * pos * neg) as f64)
}

/// Mean binary cross-entropy of probability `scores` against `labels`,
/// clamped identically to the training loss.
pub fn logloss(scores: &[f64], labels: &[u8]) -> f64 {
    let y: Vec<f64> = labels.iter().map(|&v| f64::from(v)).collect();
    ctr_loss(scores, &y)
}

/// Logloss and AUC of one prediction vector.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Metrics {
    pub logloss: f64,
    pub auc: f64,
}

pub fn compute(scores: &[f64], labels: &[u8]) -> Result<Metrics> {
    Ok(Metrics {
        logloss: logloss(scores, labels),
        auc: auc(scores, labels)?,
    })
}
