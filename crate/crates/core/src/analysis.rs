//! Per-group measurement of trace records: accuracy, the raw constraint
//! triple, and effective dimensionality of the attention patterns.

use std::collections::BTreeMap;

use crate::constraints::{beta_architectural, delta_contextual, gamma_training, ConstraintTriple};
use crate::error::{invalid, Error, Result};
use crate::semantic::{accuracy, effective_dimensionality, AttentionDistribution, PredictionRecord};
use crate::trace::{feature_matrix, GroupKey, QuestionTrace};

/// Variance share that defines effective dimensionality.
pub const DEFAULT_VARIANCE_RATIO: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub key: GroupKey,
    pub records: usize,
    pub accuracy: f64,
    /// Raw β (nats), γ, δ. `triple.window` is the window actually used.
    pub triple: ConstraintTriple,
    /// Longest attention row in the group.
    pub positions: usize,
    /// `None` for single-record groups.
    pub d_eff: Option<usize>,
}

/// Groups records by `(model, difficulty, condition)` in sorted key order.
pub fn group_records(records: &[QuestionTrace]) -> BTreeMap<GroupKey, Vec<&QuestionTrace>> {
    let mut groups: BTreeMap<GroupKey, Vec<&QuestionTrace>> = BTreeMap::new();
    for rec in records {
        groups.entry(rec.group_key()).or_default().push(rec);
    }
    groups
}

/// Summarises one group. δ uses the first `window` positions, shortened to
/// the group's shortest attention row when that is smaller.
pub fn summarize_group(key: GroupKey, records: &[&QuestionTrace], window: usize, ratio: f64) -> Result<GroupSummary> {
    if records.is_empty() {
        return Err(Error::EmptyInput("group records"));
    }
    if window < 2 {
        return Err(invalid("window", format!("{window} is below 2")));
    }
    let shortest = records.iter().map(|r| r.attention.len()).min().unwrap_or(0);
    let positions = records.iter().map(|r| r.attention.len()).max().unwrap_or(0);
    let window = window.min(shortest);
    if window < 2 {
        return Err(invalid(
            "window",
            format!("group {key} has an attention row with fewer than 2 positions"),
        ));
    }

    let dists = records
        .iter()
        .map(|r| r.attention_distribution())
        .collect::<Result<Vec<AttentionDistribution>>>()?;
    let predictions = records
        .iter()
        .map(|r| r.prediction())
        .collect::<Result<Vec<PredictionRecord>>>()?;

    let beta = beta_architectural(&dists)?;
    let gamma = gamma_training(&predictions)?;
    let mut deltas = Vec::with_capacity(dists.len());
    for d in &dists {
        deltas.push(delta_contextual(d, window)?);
    }
    let delta = deltas.iter().sum::<f64>() / deltas.len() as f64;

    let d_eff = if records.len() >= 2 {
        let fm = feature_matrix(records.iter().copied(), positions)?;
        Some(effective_dimensionality(&fm.matrix, ratio)?.d_eff)
    } else {
        None
    };

    Ok(GroupSummary {
        records: records.len(),
        accuracy: accuracy(&predictions)?,
        triple: ConstraintTriple::raw(beta, gamma, delta, window)?,
        positions,
        d_eff,
        key,
    })
}

pub fn summarize_groups(records: &[QuestionTrace], window: usize, ratio: f64) -> Result<Vec<GroupSummary>> {
    group_records(records)
        .into_iter()
        .map(|(key, recs)| summarize_group(key, &recs, window, ratio))
        .collect()
}
