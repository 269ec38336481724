//! The concept tree and the user actions that grow it.
//!
//! Every node holds an intension (its own conditions, evaluated relative to
//! the parent's extension) and the resulting extension. The children of an
//! internal node always partition that node's extension.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::ClusterError;
use crate::condition::{
    complement_intension, compute_extension, contradicts, validate_user_condition, Condition,
    ConditionError,
};
use crate::dataset::{AttributeSelection, Dataset};
use crate::rowset::RowSet;

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Root,
    Cluster,
    Defined,
    Complement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub label: Option<String>,
    pub intension: Vec<Condition>,
    pub extension: RowSet,
    pub origin: Origin,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("no node with id {0}")]
    UnknownNode(NodeId),
    #[error("node {0} has children; only leaves can be cut or defined")]
    NotALeaf(NodeId),
    #[error("node {id} has {size} rows, at least 2 are needed to cut")]
    ExtensionTooSmall { id: NodeId, size: usize },
    #[error("all rows of node {0} are identical over the selected attributes")]
    DegenerateExtension(NodeId),
    #[error("the root covers the whole dataset and cannot be given conditions")]
    RootNotDefinable,
    #[error(transparent)]
    Condition(#[from] ConditionError),
    #[error("condition {0} contradicts a condition inherited from an ancestor")]
    ContradictsAncestor(String),
    #[error("labels cannot be empty")]
    EmptyLabel,
    #[error("the root cannot be deleted")]
    RootNotDeletable,
    #[error("node {0} is an automatic complement; delete one of its defined siblings instead")]
    ComplementNotDeletable(NodeId),
}

impl EngineError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::UnknownNode(_) => "unknown_node",
            EngineError::NotALeaf(_) => "not_a_leaf",
            EngineError::ExtensionTooSmall { .. } => "extension_too_small",
            EngineError::DegenerateExtension(_) => "degenerate_extension",
            EngineError::RootNotDefinable => "root_not_definable",
            EngineError::Condition(e) => match e {
                ConditionError::UnknownAttribute(_) => "unknown_attribute",
                ConditionError::AttributeNotSelected(_) => "attribute_not_selected",
                ConditionError::KindMismatch { .. } => "kind_mismatch",
                ConditionError::ValueOutsideDomain { .. } => "value_outside_domain",
                ConditionError::EmptyValueSet => "empty_value_set",
                ConditionError::NonFiniteThreshold => "non_finite_threshold",
                ConditionError::NegationNotAllowed => "negation_not_allowed",
            },
            EngineError::ContradictsAncestor(_) => "contradicts_ancestor",
            EngineError::EmptyLabel => "empty_label",
            EngineError::RootNotDeletable => "root_not_deletable",
            EngineError::ComplementNotDeletable(_) => "complement_not_deletable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefineOutcome {
    /// The node being defined ended up with no rows.
    pub empty_extension: bool,
    pub complement: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Taxonomy {
    nodes: BTreeMap<NodeId, Node>,
    root: NodeId,
    next_id: NodeId,
}

impl Taxonomy {
    /// A single root node covering every row.
    pub fn new(dataset: &Dataset) -> Self {
        let root = Node {
            id: 0,
            label: None,
            intension: Vec::new(),
            extension: dataset.all_rows(),
            origin: Origin::Root,
            parent: None,
            children: Vec::new(),
        };
        Self { nodes: BTreeMap::from([(0, root)]), root: 0, next_id: 1 }
    }

    pub fn root(&self) -> &Node {
        &self.nodes[&self.root]
    }

    pub fn root_id(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, EngineError> {
        self.nodes.get(&id).ok_or(EngineError::UnknownNode(id))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes in id order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    /// Nodes in depth-first pre-order from the root.
    pub fn preorder(&self) -> Vec<&Node> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[&id];
            out.push(node);
            stack.extend(node.children.iter().rev());
        }
        out
    }

    /// Ancestors from the parent up to the root.
    pub fn ancestors(&self, id: NodeId) -> Vec<&Node> {
        let mut out = Vec::new();
        let mut cur = self.nodes.get(&id).and_then(|n| n.parent);
        while let Some(p) = cur {
            let node = &self.nodes[&p];
            out.push(node);
            cur = node.parent;
        }
        out
    }

    /// Conditions inherited from ancestors (nearest first).
    pub fn inherited_intension(&self, id: NodeId) -> Vec<Condition> {
        self.ancestors(id).into_iter().flat_map(|n| n.intension.iter().cloned()).collect()
    }

    /// Own conditions followed by every ancestor's.
    pub fn effective_intension(&self, id: NodeId) -> Vec<Condition> {
        let mut out = self.nodes.get(&id).map(|n| n.intension.clone()).unwrap_or_default();
        out.extend(self.inherited_intension(id));
        out
    }

    /// Other children of this node's parent, in order.
    pub fn siblings(&self, id: NodeId) -> Vec<&Node> {
        let Some(parent) = self.nodes.get(&id).and_then(|n| n.parent) else { return Vec::new() };
        self.nodes[&parent]
            .children
            .iter()
            .filter(|&&c| c != id)
            .map(|c| &self.nodes[c])
            .collect()
    }

    /// Union of the siblings' extensions, `None` when there are no siblings.
    pub fn sibling_union(&self, id: NodeId) -> Option<RowSet> {
        let siblings = self.siblings(id);
        if siblings.is_empty() {
            return None;
        }
        Some(siblings.iter().fold(RowSet::empty(), |acc, s| acc.union(&s.extension)))
    }

    fn alloc(&mut self) -> NodeId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn leaf(&self, id: NodeId) -> Result<&Node, EngineError> {
        let node = self.node(id)?;
        if !node.is_leaf() {
            return Err(EngineError::NotALeaf(id));
        }
        Ok(node)
    }

    /// Splits a leaf into two unlabelled clusters using `cluster_fn`.
    pub fn cut<F>(&mut self, id: NodeId, cluster_fn: F) -> Result<(NodeId, NodeId), EngineError>
    where
        F: FnOnce(&RowSet) -> Result<[RowSet; 2], ClusterError>,
    {
        let node = self.leaf(id)?;
        if node.extension.len() < 2 {
            return Err(EngineError::ExtensionTooSmall { id, size: node.extension.len() });
        }
        let [a, b] = cluster_fn(&node.extension).map_err(|e| match e {
            ClusterError::TooFewRows(size) => EngineError::ExtensionTooSmall { id, size },
            ClusterError::AllIdentical => EngineError::DegenerateExtension(id),
        })?;
        debug_assert!(a.is_disjoint(&b) && a.union(&b) == node.extension);
        let first = self.insert_child(id, Vec::new(), a, Origin::Cluster);
        let second = self.insert_child(id, Vec::new(), b, Origin::Cluster);
        Ok((first, second))
    }

    fn insert_child(
        &mut self,
        parent: NodeId,
        intension: Vec<Condition>,
        extension: RowSet,
        origin: Origin,
    ) -> NodeId {
        let id = self.alloc();
        self.nodes.insert(
            id,
            Node { id, label: None, intension, extension, origin, parent: Some(parent), children: Vec::new() },
        );
        self.nodes.get_mut(&parent).expect("parent exists").children.push(id);
        id
    }

    /// Adds a condition to a leaf, recomputes its extension, and replaces every
    /// sibling the user has not defined with one complement node.
    pub fn define(
        &mut self,
        id: NodeId,
        condition: &Condition,
        dataset: &Dataset,
        selection: &AttributeSelection,
    ) -> Result<DefineOutcome, EngineError> {
        let node = self.leaf(id)?;
        let parent_id = node.parent.ok_or(EngineError::RootNotDefinable)?;
        let condition = validate_user_condition(condition, dataset, selection)?;
        if contradicts(&condition, &self.inherited_intension(id)) {
            return Err(EngineError::ContradictsAncestor(condition.to_string()));
        }
        let mut intension = node.intension.clone();
        intension.push(condition);
        let parent_extension = self.nodes[&parent_id].extension.clone();
        let extension = compute_extension(&parent_extension, &intension, dataset)?;
        let siblings = self.siblings(id);
        // clusters never coexist with defined siblings, and a definition only
        // shrinks a node within its parent-relative region
        debug_assert!(siblings
            .iter()
            .all(|s| s.origin != Origin::Defined || s.extension.is_disjoint(&extension)));
        let undefined: Vec<NodeId> =
            siblings.iter().filter(|s| s.origin != Origin::Defined).map(|s| s.id).collect();

        for sibling in undefined {
            self.remove_subtree(sibling);
        }
        let empty_extension = extension.is_empty();
        let node = self.nodes.get_mut(&id).expect("checked above");
        node.intension = intension;
        node.extension = extension;
        node.origin = Origin::Defined;
        let complement = self.rebuild_complement(parent_id, dataset)?;
        Ok(DefineOutcome { empty_extension, complement })
    }

    /// Adds a complement child of `parent` covering rows no defined child covers.
    fn rebuild_complement(
        &mut self,
        parent: NodeId,
        dataset: &Dataset,
    ) -> Result<Option<NodeId>, EngineError> {
        let parent_node = &self.nodes[&parent];
        let defined: Vec<&Node> = parent_node
            .children
            .iter()
            .map(|c| &self.nodes[c])
            .filter(|n| n.origin == Origin::Defined)
            .collect();
        let covered = defined.iter().fold(RowSet::empty(), |acc, n| acc.union(&n.extension));
        let rest = parent_node.extension.difference(&covered);
        if rest.is_empty() {
            return Ok(None);
        }
        let conjunctions: Vec<&[Condition]> = defined.iter().map(|n| n.intension.as_slice()).collect();
        let intension = complement_intension(&conjunctions, &parent_node.extension, dataset);
        debug_assert_eq!(compute_extension(&parent_node.extension, &intension, dataset).as_ref(), Ok(&rest));
        Ok(Some(self.insert_child(parent, intension, rest, Origin::Complement)))
    }

    pub fn label(&mut self, id: NodeId, text: &str) -> Result<(), EngineError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(EngineError::EmptyLabel);
        }
        let node = self.nodes.get_mut(&id).ok_or(EngineError::UnknownNode(id))?;
        node.label = Some(text.to_string());
        Ok(())
    }

    /// Removes a node and its descendants, then repairs the sibling group:
    /// without a defined sibling left the whole group goes (the parent becomes
    /// a leaf again), otherwise the complement is recomputed.
    pub fn delete_subtree(&mut self, id: NodeId, dataset: &Dataset) -> Result<(), EngineError> {
        let node = self.node(id)?;
        let parent = node.parent.ok_or(EngineError::RootNotDeletable)?;
        if node.origin == Origin::Complement {
            return Err(EngineError::ComplementNotDeletable(id));
        }
        self.remove_subtree(id);
        let remaining: Vec<(NodeId, Origin)> =
            self.nodes[&parent].children.iter().map(|c| (*c, self.nodes[c].origin)).collect();
        let any_defined = remaining.iter().any(|(_, o)| *o == Origin::Defined);
        for (child, origin) in remaining {
            if !any_defined || origin != Origin::Defined {
                self.remove_subtree(child);
            }
        }
        if any_defined {
            self.rebuild_complement(parent, dataset)?;
        }
        Ok(())
    }

    fn remove_subtree(&mut self, id: NodeId) {
        let Some(node) = self.nodes.remove(&id) else { return };
        if let Some(parent) = node.parent.and_then(|p| self.nodes.get_mut(&p)) {
            parent.children.retain(|&c| c != id);
        }
        let mut stack = node.children;
        while let Some(c) = stack.pop() {
            if let Some(child) = self.nodes.remove(&c) {
                stack.extend(child.children);
            }
        }
    }

    /// Structural checks: tree shape, partition and subsumption, origin rules.
    pub fn check_invariants(&self, dataset: &Dataset) -> Result<(), String> {
        let root = self.root();
        if root.extension != dataset.all_rows() {
            return Err("root extension is not the full row set".into());
        }
        let mut reachable = 0;
        for node in self.preorder() {
            reachable += 1;
            match node.origin {
                Origin::Root if node.id != self.root => return Err(format!("{} is a second root", node.id)),
                Origin::Cluster if !node.intension.is_empty() => {
                    return Err(format!("cluster {} has an intension", node.id))
                }
                Origin::Defined if node.intension.is_empty() => {
                    return Err(format!("defined node {} has no conditions", node.id))
                }
                Origin::Complement if node.intension.len() != 1 => {
                    return Err(format!("complement {} must hold exactly one condition", node.id))
                }
                _ => {}
            }
            if let Some(parent) = node.parent {
                let p = self.node(parent).map_err(|e| e.to_string())?;
                if !p.children.contains(&node.id) {
                    return Err(format!("{} is not listed by its parent", node.id));
                }
                if !node.extension.is_subset(&p.extension) {
                    return Err(format!("{} is not subsumed by {}", node.id, parent));
                }
            }
            if !node.children.is_empty() {
                let mut union = RowSet::empty();
                let mut total = 0;
                for c in &node.children {
                    let child = self.node(*c).map_err(|e| e.to_string())?;
                    if child.parent != Some(node.id) {
                        return Err(format!("{c} has the wrong parent"));
                    }
                    total += child.extension.len();
                    union = union.union(&child.extension);
                }
                if total != union.len() || union != node.extension {
                    return Err(format!("children of {} do not partition it", node.id));
                }
            }
        }
        if reachable != self.nodes.len() {
            return Err("unreachable nodes present".into());
        }
        Ok(())
    }
}
