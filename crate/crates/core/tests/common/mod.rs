//! Test-only oracles shared by the integration and acceptance targets.
#![allow(dead_code)]

pub mod owl_reader;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use tabiic_core::dataset::{ColumnKind, Value};
use tabiic_core::{load_dataset, Condition, Dataset, LoadOptions, Origin, RowSet, Session};

pub const IRIS_ATTRIBUTES: [&str; 4] = ["sepal_length", "sepal_width", "petal_length", "petal_width"];

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn load_text(text: &str) -> Arc<Dataset> {
    Arc::new(load_dataset(text.as_bytes(), &LoadOptions::default()).expect("valid csv"))
}

pub fn iris() -> Arc<Dataset> {
    let bytes = std::fs::read(data_path("iris.csv")).expect("data/iris.csv");
    Arc::new(load_dataset(&bytes, &LoadOptions::default()).expect("iris loads"))
}

pub fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Direct evaluation of a condition on one row, without the engine's compiled path.
pub fn holds(ds: &Dataset, row: u32, cond: &Condition) -> bool {
    let cell = |attr: &str| ds.value(row, ds.column_index(attr).expect("known attribute"));
    match cond {
        Condition::In { attribute, values } => match cell(attribute) {
            Value::Text(s) => values.iter().any(|v| v == s),
            Value::Number(_) => false,
        },
        Condition::Leq { attribute, threshold } => matches!(cell(attribute), Value::Number(x) if x <= *threshold),
        Condition::Gt { attribute, threshold } => matches!(cell(attribute), Value::Number(x) if x > *threshold),
        Condition::Not { of } => !of.iter().any(|conj| conj.iter().all(|c| holds(ds, row, c))),
    }
}

pub fn brute_filter(ds: &Dataset, rows: impl IntoIterator<Item = u32>, conds: &[Condition]) -> Vec<u32> {
    rows.into_iter().filter(|&r| conds.iter().all(|c| holds(ds, r, c))).collect()
}

/// Every structural and semantic invariant of a session's tree, checked by brute force.
pub fn check_tree(session: &Session) -> Result<(), String> {
    let ds = session.dataset();
    let t = session.taxonomy();
    t.check_invariants(ds).map_err(|e| format!("engine invariant: {e}"))?;
    let all: Vec<u32> = (0..ds.len() as u32).collect();
    if t.root().extension.as_slice() != all.as_slice() {
        return Err("root extension is not the full dataset".into());
    }
    for node in t.nodes() {
        let ext = node.extension.as_slice();
        if ext.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("node {} extension not sorted/unique", node.id));
        }
        match node.origin {
            Origin::Cluster if !node.intension.is_empty() => return Err(format!("cluster {} has an intension", node.id)),
            Origin::Defined | Origin::Complement if node.intension.is_empty() => {
                return Err(format!("node {} has no intension", node.id))
            }
            _ => {}
        }
        if let Some(p) = node.parent {
            let parent = t.node(p).map_err(|e| e.to_string())?;
            if !parent.children.contains(&node.id) {
                return Err(format!("node {} missing from parent's children", node.id));
            }
            if !ext.iter().all(|r| parent.extension.contains(*r)) {
                return Err(format!("node {} not subsumed by parent {p}", node.id));
            }
            if matches!(node.origin, Origin::Defined | Origin::Complement) {
                let expected = brute_filter(ds, parent.extension.iter(), &node.intension);
                if expected != ext {
                    return Err(format!("node {} extension differs from its intension", node.id));
                }
            }
            let ancestors = t.ancestors(node.id);
            let traceable = std::iter::once(node)
                .chain(ancestors.iter().copied())
                .filter(|n| n.parent.is_some())
                .all(|n| matches!(n.origin, Origin::Defined | Origin::Complement));
            if traceable && brute_filter(ds, all.iter().copied(), &t.effective_intension(node.id)) != ext {
                return Err(format!("node {} effective intension disagrees on the full dataset", node.id));
            }
        } else if node.id != t.root_id() {
            return Err(format!("orphan node {}", node.id));
        }
        if node.children.is_empty() {
            continue;
        }
        let mut seen = BTreeSet::new();
        let kids: Vec<_> = node.children.iter().map(|c| t.node(*c).expect("child exists")).collect();
        // a lone child is only possible when a definition left nothing for a complement
        if kids.len() < 2 && kids[0].origin != Origin::Defined {
            return Err(format!("node {} has a single {:?} child", node.id, kids[0].origin));
        }
        for kid in &kids {
            if kid.parent != Some(node.id) {
                return Err(format!("child {} has wrong parent", kid.id));
            }
            for r in kid.extension.iter() {
                if !seen.insert(r) {
                    return Err(format!("children of {} overlap on row {r}", node.id));
                }
            }
        }
        if seen.into_iter().collect::<Vec<_>>() != ext {
            return Err(format!("children of {} do not cover it", node.id));
        }
        let origins: Vec<Origin> = kids.iter().map(|k| k.origin).collect();
        let clusters = origins.iter().filter(|o| **o == Origin::Cluster).count();
        let complements = origins.iter().filter(|o| **o == Origin::Complement).count();
        if clusters > 0 && clusters != kids.len() {
            return Err(format!("clusters of {} mixed with defined siblings", node.id));
        }
        if complements > 1 {
            return Err(format!("node {} has several complements", node.id));
        }
        if let Some(comp) = kids.iter().find(|k| k.origin == Origin::Complement) {
            let defined = kids
                .iter()
                .filter(|k| k.origin == Origin::Defined)
                .fold(RowSet::empty(), |acc, k| acc.union(&k.extension));
            if comp.extension != node.extension.difference(&defined) {
                return Err(format!("complement {} is not parent minus defined siblings", comp.id));
            }
        }
    }
    Ok(())
}

/// Species (or any nominal column) purity per leaf: `(leaf, size, majority value, majority count)`.
pub fn leaf_purity(session: &Session, column: &str) -> Vec<(u32, usize, String, usize)> {
    let ds = session.dataset();
    let col = ds.column_index(column).expect("column");
    session
        .taxonomy()
        .preorder()
        .into_iter()
        .filter(|n| n.children.is_empty())
        .map(|n| {
            let mut counts = std::collections::BTreeMap::<String, usize>::new();
            for r in n.extension.iter() {
                *counts.entry(ds.value(r, col).to_string()).or_default() += 1;
            }
            let (best, count) = counts
                .into_iter()
                .fold((String::new(), 0), |acc, (k, c)| if c > acc.1 { (k, c) } else { acc });
            (n.id, n.extension.len(), best, count)
        })
        .collect()
}

enum ColumnGen {
    Integer(i64),
    Decimal(f64),
    Nominal(usize),
}

const CATEGORIES: [&str; 5] = ["red", "green", "blue", "cyan", "gold"];

/// Random mixed-type table as CSV text, with the kind of each column.
pub fn random_mixed_csv(rng: &mut impl Rng, rows: usize, columns: usize) -> (String, Vec<ColumnKind>) {
    let gens: Vec<ColumnGen> = (0..columns)
        .map(|_| match rng.random_range(0..3) {
            0 => ColumnGen::Integer(rng.random_range(-50..50)),
            1 => ColumnGen::Decimal(rng.random_range(-50.0..50.0)),
            _ => ColumnGen::Nominal(rng.random_range(2..=CATEGORIES.len())),
        })
        .collect();
    let kinds = gens
        .iter()
        .map(|g| if matches!(g, ColumnGen::Nominal(_)) { ColumnKind::Nominal } else { ColumnKind::Numeric })
        .collect();
    let header: Vec<String> = (0..columns).map(|c| format!("c{c}")).collect();
    let mut text = header.join(",");
    text.push('\n');
    for _ in 0..rows {
        let cells: Vec<String> = gens
            .iter()
            .map(|g| match g {
                ColumnGen::Integer(offset) => (rng.random_range(0..20) + offset).to_string(),
                ColumnGen::Decimal(offset) => format!("{:.2}", rng.random_range(0.0..100.0) + offset),
                ColumnGen::Nominal(k) => CATEGORIES[rng.random_range(0..*k)].to_string(),
            })
            .collect();
        let _ = writeln!(text, "{}", cells.join(","));
    }
    (text, kinds)
}

pub fn shuffled<T: Clone>(rng: &mut impl Rng, items: &[T]) -> Vec<T> {
    let mut v = items.to_vec();
    v.shuffle(rng);
    v
}
