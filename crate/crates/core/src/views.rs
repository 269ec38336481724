//! Serializable snapshots of a session, shared by the HTTP service, the CLI
//! and the browser demo.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::condition::Condition;
use crate::dataset::{ColumnKind, Dataset, Domain};
use crate::insight::{profile, AttributeProfile};
use crate::session::Session;
use crate::taxonomy::{EngineError, Node, NodeId, Origin, Taxonomy};

/// Number of rows listed in a node detail.
pub const SAMPLE_ROWS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeView {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub label: Option<String>,
    pub origin: Origin,
    pub intension: Vec<Condition>,
    pub extension_size: usize,
    pub children: Vec<NodeId>,
}

impl From<&Node> for NodeView {
    fn from(node: &Node) -> Self {
        Self {
            id: node.id,
            parent: node.parent,
            label: node.label.clone(),
            origin: node.origin,
            intension: node.intension.clone(),
            extension_size: node.extension.len(),
            children: node.children.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeView {
    pub root: NodeId,
    /// Depth-first pre-order, root first.
    pub nodes: Vec<NodeView>,
}

impl From<&Taxonomy> for TreeView {
    fn from(t: &Taxonomy) -> Self {
        Self { root: t.root_id(), nodes: t.preorder().into_iter().map(NodeView::from).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionView {
    pub condition: Condition,
    /// Human-readable form, alternatives joined by `OR`.
    pub text: String,
}

impl From<&Condition> for ConditionView {
    fn from(c: &Condition) -> Self {
        Self { condition: c.clone(), text: c.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDetail {
    pub node: NodeView,
    /// Conditions set on this node, not inherited.
    pub own_intension: Vec<ConditionView>,
    pub inherited_intension: Vec<ConditionView>,
    pub profiles: Vec<AttributeProfile>,
    pub sample_rows: Vec<BTreeMap<String, String>>,
}

impl NodeDetail {
    pub fn build(session: &Session, id: NodeId) -> Result<Self, EngineError> {
        let taxonomy = session.taxonomy();
        let node = taxonomy.node(id)?;
        let dataset = session.dataset();
        let profiles = if node.extension.is_empty() {
            Vec::new()
        } else {
            profile(dataset, session.selection(), &node.extension, taxonomy.sibling_union(id).as_ref())
        };
        let sample_rows = node
            .extension
            .iter()
            .take(SAMPLE_ROWS)
            .map(|r| {
                dataset
                    .columns()
                    .iter()
                    .enumerate()
                    .map(|(c, meta)| (meta.name.clone(), dataset.value(r, c).to_string()))
                    .collect()
            })
            .collect();
        Ok(Self {
            node: node.into(),
            own_intension: node.intension.iter().map(ConditionView::from).collect(),
            inherited_intension: taxonomy.inherited_intension(id).iter().map(ConditionView::from).collect(),
            profiles,
            sample_rows,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub kind: ColumnKind,
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub file_name: String,
    pub rows_before_filtering: usize,
    pub rows: usize,
    pub columns: Vec<ColumnSummary>,
    pub default_selection: Vec<String>,
}

impl DatasetSummary {
    pub fn new(dataset: &Dataset, file_name: &str, default_selection: &[String]) -> Self {
        Self {
            file_name: file_name.to_string(),
            rows_before_filtering: dataset.source_rows(),
            rows: dataset.len(),
            columns: dataset
                .columns()
                .iter()
                .map(|c| ColumnSummary { name: c.name.clone(), kind: c.kind, domain: c.domain.clone() })
                .collect(),
            default_selection: default_selection.to_vec(),
        }
    }
}
