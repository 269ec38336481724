//! Attribute conditions and their evaluation over row sets.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{AttributeSelection, ColumnKind, Dataset};
use crate::rowset::RowSet;

/// One constraint in an intension.
///
/// `Leq` is inclusive, `Gt` exclusive, so the two are exact complements.
/// `Not` only ever appears in automatically created complement nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Condition {
    In { attribute: String, values: Vec<String> },
    Leq { attribute: String, threshold: f64 },
    Gt { attribute: String, threshold: f64 },
    /// Satisfied by rows that satisfy none of the listed conjunctions.
    Not { of: Vec<Vec<Condition>> },
}

impl Condition {
    pub fn is_in(attribute: impl Into<String>, values: &[&str]) -> Self {
        Condition::In {
            attribute: attribute.into(),
            values: values.iter().map(|v| v.to_string()).collect(),
        }
    }

    pub fn leq(attribute: impl Into<String>, threshold: f64) -> Self {
        Condition::Leq { attribute: attribute.into(), threshold }
    }

    pub fn gt(attribute: impl Into<String>, threshold: f64) -> Self {
        Condition::Gt { attribute: attribute.into(), threshold }
    }

    /// The constrained attribute; `None` for negations.
    pub fn attribute(&self) -> Option<&str> {
        match self {
            Condition::In { attribute, .. }
            | Condition::Leq { attribute, .. }
            | Condition::Gt { attribute, .. } => Some(attribute),
            Condition::Not { .. } => None,
        }
    }

    pub fn is_negation(&self) -> bool {
        matches!(self, Condition::Not { .. })
    }

    /// Every attribute mentioned, including inside negations.
    pub fn attributes(&self) -> Vec<&str> {
        match self {
            Condition::Not { of } => of.iter().flatten().flat_map(|c| c.attributes()).collect(),
            other => other.attribute().into_iter().collect(),
        }
    }
}

fn fmt_conjunction(f: &mut fmt::Formatter<'_>, conds: &[Condition]) -> fmt::Result {
    for (i, c) in conds.iter().enumerate() {
        if i > 0 {
            f.write_str(" AND ")?;
        }
        write!(f, "{c}")?;
    }
    Ok(())
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::In { attribute, values } => write!(f, "{attribute} = {}", values.join(" OR ")),
            Condition::Leq { attribute, threshold } => write!(f, "{attribute} <= {threshold}"),
            Condition::Gt { attribute, threshold } => write!(f, "{attribute} > {threshold}"),
            Condition::Not { of } => {
                f.write_str("NOT (")?;
                for (i, conj) in of.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" OR ")?;
                    }
                    f.write_str("(")?;
                    fmt_conjunction(f, conj)?;
                    f.write_str(")")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConditionError {
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("attribute {0:?} is not among the selected attributes")]
    AttributeNotSelected(String),
    #[error("attribute {attribute:?} is {actual}, the condition needs a {expected} attribute")]
    KindMismatch { attribute: String, expected: ColumnKind, actual: ColumnKind },
    #[error("value {value:?} is not in the domain of {attribute:?}")]
    ValueOutsideDomain { attribute: String, value: String },
    #[error("a value condition needs at least one value")]
    EmptyValueSet,
    #[error("threshold must be a finite number")]
    NonFiniteThreshold,
    #[error("negated conditions cannot be entered directly")]
    NegationNotAllowed,
}

enum Compiled {
    In { column: usize, allowed: Vec<bool> },
    Leq { column: usize, threshold: f64 },
    Gt { column: usize, threshold: f64 },
    Not(Vec<Vec<Compiled>>),
}

impl Compiled {
    fn new(cond: &Condition, dataset: &Dataset) -> Result<Self, ConditionError> {
        let numeric_column = |attribute: &str| -> Result<usize, ConditionError> {
            let column = column_of(dataset, attribute)?;
            expect_kind(dataset, column, ColumnKind::Numeric)?;
            Ok(column)
        };
        Ok(match cond {
            Condition::In { attribute, values } => {
                let column = column_of(dataset, attribute)?;
                expect_kind(dataset, column, ColumnKind::Nominal)?;
                let domain = dataset.column(column).nominal_values().unwrap_or_default();
                let allowed = domain.iter().map(|d| values.iter().any(|v| v == d)).collect();
                Compiled::In { column, allowed }
            }
            Condition::Leq { attribute, threshold } => {
                Compiled::Leq { column: numeric_column(attribute)?, threshold: *threshold }
            }
            Condition::Gt { attribute, threshold } => {
                Compiled::Gt { column: numeric_column(attribute)?, threshold: *threshold }
            }
            Condition::Not { of } => Compiled::Not(
                of.iter()
                    .map(|conj| conj.iter().map(|c| Compiled::new(c, dataset)).collect())
                    .collect::<Result<_, _>>()?,
            ),
        })
    }

    fn holds(&self, dataset: &Dataset, row: u32) -> bool {
        match self {
            Compiled::In { column, allowed } => {
                dataset.nominal_code(row, *column).is_some_and(|code| allowed[code as usize])
            }
            Compiled::Leq { column, threshold } => {
                dataset.numeric(row, *column).is_some_and(|x| x <= *threshold)
            }
            Compiled::Gt { column, threshold } => {
                dataset.numeric(row, *column).is_some_and(|x| x > *threshold)
            }
            Compiled::Not(conjs) => {
                !conjs.iter().any(|conj| conj.iter().all(|c| c.holds(dataset, row)))
            }
        }
    }
}

fn column_of(dataset: &Dataset, attribute: &str) -> Result<usize, ConditionError> {
    dataset
        .column_index(attribute)
        .ok_or_else(|| ConditionError::UnknownAttribute(attribute.to_string()))
}

fn expect_kind(dataset: &Dataset, column: usize, expected: ColumnKind) -> Result<(), ConditionError> {
    let meta = dataset.column(column);
    if meta.kind != expected {
        return Err(ConditionError::KindMismatch {
            attribute: meta.name.clone(),
            expected,
            actual: meta.kind,
        });
    }
    Ok(())
}

/// Rows of `parent` satisfying every condition of `intension`.
pub fn compute_extension(
    parent: &RowSet,
    intension: &[Condition],
    dataset: &Dataset,
) -> Result<RowSet, ConditionError> {
    let compiled: Vec<Compiled> =
        intension.iter().map(|c| Compiled::new(c, dataset)).collect::<Result<_, _>>()?;
    Ok(parent.filter(|row| compiled.iter().all(|c| c.holds(dataset, row))))
}

/// Checks a user-entered condition and returns its canonical form
/// (nominal values deduplicated and in domain order).
pub fn validate_user_condition(
    cond: &Condition,
    dataset: &Dataset,
    selection: &AttributeSelection,
) -> Result<Condition, ConditionError> {
    let attribute = cond.attribute().ok_or(ConditionError::NegationNotAllowed)?;
    let column = column_of(dataset, attribute)?;
    if !selection.contains(column) {
        return Err(ConditionError::AttributeNotSelected(attribute.to_string()));
    }
    match cond {
        Condition::In { attribute, values } => {
            expect_kind(dataset, column, ColumnKind::Nominal)?;
            if values.is_empty() {
                return Err(ConditionError::EmptyValueSet);
            }
            let domain = dataset.column(column).nominal_values().unwrap_or_default();
            if let Some(bad) = values.iter().find(|v| !domain.contains(v)) {
                return Err(ConditionError::ValueOutsideDomain {
                    attribute: attribute.clone(),
                    value: bad.clone(),
                });
            }
            let values = domain.iter().filter(|d| values.contains(d)).cloned().collect();
            Ok(Condition::In { attribute: attribute.clone(), values })
        }
        Condition::Leq { threshold, .. } | Condition::Gt { threshold, .. } => {
            expect_kind(dataset, column, ColumnKind::Numeric)?;
            if !threshold.is_finite() {
                return Err(ConditionError::NonFiniteThreshold);
            }
            Ok(cond.clone())
        }
        Condition::Not { .. } => unreachable!("negations have no attribute"),
    }
}

/// True when `candidate` cannot be satisfied together with the positive
/// conditions in `inherited` on the same attribute.
pub fn contradicts(candidate: &Condition, inherited: &[Condition]) -> bool {
    let Some(attribute) = candidate.attribute() else { return false };
    let same: Vec<&Condition> =
        inherited.iter().filter(|c| c.attribute() == Some(attribute)).collect();
    match candidate {
        Condition::In { values, .. } => same.iter().any(|c| match c {
            Condition::In { values: other, .. } => !values.iter().any(|v| other.contains(v)),
            _ => false,
        }),
        Condition::Leq { .. } | Condition::Gt { .. } => {
            let mut lower = f64::NEG_INFINITY; // exclusive
            let mut upper = f64::INFINITY; // inclusive
            for c in same.iter().copied().chain(std::iter::once(candidate)) {
                match c {
                    Condition::Leq { threshold, .. } => upper = upper.min(*threshold),
                    Condition::Gt { threshold, .. } => lower = lower.max(*threshold),
                    _ => {}
                }
            }
            lower >= upper
        }
        Condition::Not { .. } => false,
    }
}

/// Intension for the node covering whatever `parent` rows the defined
/// siblings leave uncovered.
///
/// Stays a single `Not` unless an equivalent positive condition exists:
/// all defined siblings restrict one nominal attribute (the remaining values
/// present in the parent are kept), or a single sibling carries a single
/// threshold (the opposite inequality).
pub fn complement_intension(
    defined: &[&[Condition]],
    parent: &RowSet,
    dataset: &Dataset,
) -> Vec<Condition> {
    if let Some(simplified) = simplify_nominal(defined, parent, dataset) {
        return vec![simplified];
    }
    if let [only] = defined {
        match *only {
            [Condition::Leq { attribute, threshold }] => {
                return vec![Condition::gt(attribute.clone(), *threshold)];
            }
            [Condition::Gt { attribute, threshold }] => {
                return vec![Condition::leq(attribute.clone(), *threshold)];
            }
            _ => {}
        }
    }
    vec![Condition::Not { of: defined.iter().map(|conj| conj.to_vec()).collect() }]
}

fn simplify_nominal(
    defined: &[&[Condition]],
    parent: &RowSet,
    dataset: &Dataset,
) -> Option<Condition> {
    let first = defined.first()?.first()?.attribute()?;
    let column = dataset.column_index(first)?;
    let domain = dataset.column(column).nominal_values()?;
    let mut covered = vec![false; domain.len()];
    for conj in defined {
        if conj.is_empty() {
            return None;
        }
        let mut allowed = vec![true; domain.len()];
        for c in conj.iter() {
            match c {
                Condition::In { attribute, values } if attribute == first => {
                    for (slot, d) in allowed.iter_mut().zip(domain) {
                        *slot &= values.contains(d);
                    }
                }
                _ => return None,
            }
        }
        for (slot, a) in covered.iter_mut().zip(allowed) {
            *slot |= a;
        }
    }
    let mut present = vec![false; domain.len()];
    for row in parent.iter() {
        if let Some(code) = dataset.nominal_code(row, column) {
            present[code as usize] = true;
        }
    }
    let values: Vec<String> = domain
        .iter()
        .enumerate()
        .filter(|&(i, _)| present[i] && !covered[i])
        .map(|(_, d)| d.clone())
        .collect();
    if values.is_empty() {
        return None;
    }
    Some(Condition::In { attribute: first.to_string(), values })
}
