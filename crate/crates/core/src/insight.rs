//! Per-node attribute statistics, ranked by how much they set the node apart
//! from its siblings, and the mapping between a target average and the
//! threshold that yields it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{AttributeSelection, ColumnKind, Dataset};
use crate::rowset::RowSet;

/// Added to the pooled standard deviation before dividing.
pub const POOLED_STD_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Stat {
    /// `std` is the sample standard deviation (0 for a single row).
    Numeric { mean: f64, std: f64 },
    Nominal { mode: String, frequency: f64 },
}

/// Suggested starting value for a condition on the attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Prefill {
    Mean { value: f64 },
    Mode { value: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeProfile {
    pub attribute: String,
    pub kind: ColumnKind,
    pub stat: Stat,
    pub divergence: f64,
    pub prefill: Prefill,
}

struct Moments {
    n: usize,
    mean: f64,
    var: f64,
}

fn moments(xs: &[f64]) -> Moments {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    Moments { n, mean, var }
}

fn pooled_std(a: &Moments, b: &Moments) -> f64 {
    let dof = a.n + b.n;
    if dof <= 2 {
        return 0.0;
    }
    (((a.n.saturating_sub(1)) as f64 * a.var + (b.n.saturating_sub(1)) as f64 * b.var) / (dof - 2) as f64)
        .sqrt()
}

fn distribution(dataset: &Dataset, rows: &RowSet, column: usize) -> BTreeMap<u32, f64> {
    let mut counts = BTreeMap::new();
    for r in rows.iter() {
        *counts.entry(dataset.nominal_code(r, column).unwrap()).or_insert(0.0) += 1.0;
    }
    let n = rows.len() as f64;
    counts.values_mut().for_each(|c| *c /= n);
    counts
}

/// Total variation distance between two discrete distributions.
pub fn total_variation(p: &BTreeMap<u32, f64>, q: &BTreeMap<u32, f64>) -> f64 {
    let keys: std::collections::BTreeSet<&u32> = p.keys().chain(q.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| (p.get(k).unwrap_or(&0.0) - q.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

/// Profiles the selected attributes of `node`, most divergent first.
///
/// Numeric divergence is the mean difference over the pooled sample standard
/// deviation; nominal divergence is the total variation distance. Without
/// sibling rows every divergence is 0 and column order is kept.
pub fn profile(
    dataset: &Dataset,
    selection: &AttributeSelection,
    node: &RowSet,
    siblings: Option<&RowSet>,
) -> Vec<AttributeProfile> {
    assert!(!node.is_empty(), "cannot profile an empty node");
    let siblings = siblings.filter(|s| !s.is_empty());
    let mut out = Vec::with_capacity(selection.len());
    for &column in selection.columns() {
        let meta = dataset.column(column);
        let profile = match meta.kind {
            ColumnKind::Numeric => {
                let xs: Vec<f64> = node.iter().map(|r| dataset.numeric(r, column).unwrap()).collect();
                let m = moments(&xs);
                let divergence = siblings.map_or(0.0, |s| {
                    let ys: Vec<f64> = s.iter().map(|r| dataset.numeric(r, column).unwrap()).collect();
                    let o = moments(&ys);
                    (m.mean - o.mean).abs() / (pooled_std(&m, &o) + POOLED_STD_EPSILON)
                });
                AttributeProfile {
                    attribute: meta.name.clone(),
                    kind: meta.kind,
                    stat: Stat::Numeric { mean: m.mean, std: m.var.sqrt() },
                    divergence,
                    prefill: Prefill::Mean { value: m.mean },
                }
            }
            ColumnKind::Nominal => {
                let p = distribution(dataset, node, column);
                // first code among equals: lowest in domain order
                let (&code, &frequency) = p
                    .iter()
                    .fold(None::<(&u32, &f64)>, |best, kv| match best {
                        Some(b) if b.1 >= kv.1 => Some(b),
                        _ => Some(kv),
                    })
                    .expect("nonempty node");
                let mode = meta.nominal_values().unwrap()[code as usize].clone();
                let divergence =
                    siblings.map_or(0.0, |s| total_variation(&p, &distribution(dataset, s, column)));
                AttributeProfile {
                    attribute: meta.name.clone(),
                    kind: meta.kind,
                    stat: Stat::Nominal { mode: mode.clone(), frequency },
                    divergence,
                    prefill: Prefill::Mode { value: mode },
                }
            }
            ColumnKind::Identifier => continue,
        };
        out.push(profile);
    }
    // stable: equal divergences keep column order
    out.sort_by(|a, b| b.divergence.total_cmp(&a.divergence));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Leq,
    Gt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityResult {
    pub threshold: f64,
    pub side: Side,
    pub achieved_mean: f64,
    /// `selected / total`.
    pub coverage: f64,
    pub selected: usize,
    pub total: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DualityError {
    #[error("no values to choose a threshold from")]
    NoValues,
    #[error("threshold {threshold} selects no value")]
    EmptySelection { threshold: f64 },
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Picks the threshold whose selected subset has the mean closest to `target`.
///
/// Candidates are every realizable `value <= t` prefix and `value > t` suffix
/// of the sorted values. Ties go to the larger subset, then to `Leq`, then to
/// the lower threshold.
pub fn threshold_for_average(values: &[f64], target: f64) -> Result<DualityResult, DualityError> {
    if values.is_empty() {
        return Err(DualityError::NoValues);
    }
    let v = sorted(values);
    let n = v.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for x in &v {
        prefix.push(prefix.last().unwrap() + x);
    }
    let total = prefix[n];
    let mut best: Option<(f64, DualityResult)> = None;
    let mut consider = |threshold: f64, side: Side, sum: f64, count: usize| {
        let mean = sum / count as f64;
        let dist = (mean - target).abs();
        let better = match &best {
            None => true,
            Some((d, b)) => dist < *d || (dist == *d && count > b.selected),
        };
        if better {
            let result = DualityResult {
                threshold,
                side,
                achieved_mean: mean,
                coverage: count as f64 / n as f64,
                selected: count,
                total: n,
            };
            best = Some((dist, result));
        }
    };
    for k in 1..=n {
        if k == n || v[k - 1] < v[k] {
            consider(v[k - 1], Side::Leq, prefix[k], k);
        }
    }
    for j in 1..n {
        if v[j - 1] < v[j] {
            consider(v[j - 1], Side::Gt, total - prefix[j], n - j);
        }
    }
    Ok(best.expect("at least one candidate").1)
}

/// Mean and coverage of the values selected by `threshold` on `side`.
pub fn average_for_threshold(
    values: &[f64],
    threshold: f64,
    side: Side,
) -> Result<DualityResult, DualityError> {
    if values.is_empty() {
        return Err(DualityError::NoValues);
    }
    let v = sorted(values);
    let cut = v.partition_point(|&x| x <= threshold);
    let selected = match side {
        Side::Leq => &v[..cut],
        Side::Gt => &v[cut..],
    };
    if selected.is_empty() {
        return Err(DualityError::EmptySelection { threshold });
    }
    Ok(DualityResult {
        threshold,
        side,
        achieved_mean: selected.iter().sum::<f64>() / selected.len() as f64,
        coverage: selected.len() as f64 / v.len() as f64,
        selected: selected.len(),
        total: v.len(),
    })
}

/// The values of a numeric column over `rows`, sorted ascending.
pub fn numeric_values(dataset: &Dataset, rows: &RowSet, column: usize) -> Option<Vec<f64>> {
    let mut v: Vec<f64> = rows.iter().map(|r| dataset.numeric(r, column)).collect::<Option<_>>()?;
    v.sort_by(f64::total_cmp);
    Some(v)
}
