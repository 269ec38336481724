//! A taxonomy under construction together with the log of actions that built it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{encode, kmeans2};
use crate::condition::Condition;
use crate::dataset::{AttributeSelection, ColumnKind, Dataset};
use crate::insight::{average_for_threshold, numeric_values, threshold_for_average, DualityError, DualityResult, Side};
use crate::taxonomy::{EngineError, NodeId, Taxonomy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    Cut { target: NodeId },
    Define { target: NodeId, condition: Condition },
    Label { target: NodeId, text: String },
    Delete { target: NodeId },
}

impl Action {
    pub fn target(&self) -> NodeId {
        match self {
            Action::Cut { target }
            | Action::Define { target, .. }
            | Action::Label { target, .. }
            | Action::Delete { target } => *target,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Warning {
    EmptyExtension,
}

impl Warning {
    pub fn code(&self) -> &'static str {
        match self {
            Warning::EmptyExtension => "empty_extension",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionOutcome {
    pub warning: Option<Warning>,
    /// Nodes created by the action.
    pub created: Vec<NodeId>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("there is no action to undo")]
    NothingToUndo,
    #[error("action {index} failed during replay: {source}")]
    Replay { index: usize, source: EngineError },
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::Engine(e) => e.code(),
            SessionError::NothingToUndo => "nothing_to_undo",
            SessionError::Replay { .. } => "replay_failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DualityQuery {
    TargetMean { target_mean: f64 },
    Threshold { threshold: f64, side: Side },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("attribute {0:?} is not numeric")]
    NonNumericAttribute(String),
    #[error("node {0} has no rows")]
    EmptyNode(NodeId),
    #[error(transparent)]
    Duality(#[from] DualityError),
}

impl QueryError {
    pub fn code(&self) -> &'static str {
        match self {
            QueryError::Engine(e) => e.code(),
            QueryError::UnknownAttribute(_) => "unknown_attribute",
            QueryError::NonNumericAttribute(_) => "non_numeric_attribute",
            QueryError::EmptyNode(_) => "empty_node",
            QueryError::Duality(DualityError::EmptySelection { .. }) => "empty_selection",
            QueryError::Duality(DualityError::NoValues) => "empty_node",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    dataset: Arc<Dataset>,
    file_name: String,
    selection: AttributeSelection,
    seed: u64,
    taxonomy: Taxonomy,
    log: Vec<Action>,
}

impl Session {
    pub fn new(
        dataset: Arc<Dataset>,
        file_name: impl Into<String>,
        selection: AttributeSelection,
        seed: u64,
    ) -> Self {
        let taxonomy = Taxonomy::new(&dataset);
        Self { dataset, file_name: file_name.into(), selection, seed, taxonomy, log: Vec::new() }
    }

    /// Rebuilds a session from scratch by applying `actions` in order.
    pub fn replay(
        dataset: Arc<Dataset>,
        file_name: impl Into<String>,
        selection: AttributeSelection,
        seed: u64,
        actions: impl IntoIterator<Item = Action>,
    ) -> Result<Self, SessionError> {
        let mut session = Self::new(dataset, file_name, selection, seed);
        for (index, action) in actions.into_iter().enumerate() {
            session.apply(action).map_err(|e| match e {
                SessionError::Engine(source) => SessionError::Replay { index, source },
                other => other,
            })?;
        }
        Ok(session)
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.dataset
    }

    pub fn file_name(&self) -> &str {
        &self.file_name
    }

    pub fn selection(&self) -> &AttributeSelection {
        &self.selection
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn log(&self) -> &[Action] {
        &self.log
    }

    /// Applies one action; on error the taxonomy and log are left untouched.
    pub fn apply(&mut self, action: Action) -> Result<ActionOutcome, SessionError> {
        let mut next = self.taxonomy.clone();
        let outcome = self.apply_to(&mut next, &action)?;
        self.taxonomy = next;
        self.log.push(action);
        Ok(outcome)
    }

    fn apply_to(&self, taxonomy: &mut Taxonomy, action: &Action) -> Result<ActionOutcome, EngineError> {
        let dataset = &*self.dataset;
        Ok(match action {
            Action::Cut { target } => {
                let (a, b) = taxonomy.cut(*target, |extension| {
                    let matrix = encode(dataset, &self.selection, extension);
                    Ok(kmeans2(&matrix, self.seed)?.partition())
                })?;
                ActionOutcome { warning: None, created: vec![a, b] }
            }
            Action::Define { target, condition } => {
                let out = taxonomy.define(*target, condition, dataset, &self.selection)?;
                ActionOutcome {
                    warning: out.empty_extension.then_some(Warning::EmptyExtension),
                    created: out.complement.into_iter().collect(),
                }
            }
            Action::Label { target, text } => {
                taxonomy.label(*target, text)?;
                ActionOutcome::default()
            }
            Action::Delete { target } => {
                let before: Vec<NodeId> = taxonomy.nodes().map(|n| n.id).collect();
                taxonomy.delete_subtree(*target, dataset)?;
                let created = taxonomy.nodes().map(|n| n.id).filter(|id| !before.contains(id)).collect();
                ActionOutcome { warning: None, created }
            }
        })
    }

    /// Reverts the last action by replaying the truncated log.
    pub fn undo(&mut self) -> Result<(), SessionError> {
        if self.log.is_empty() {
            return Err(SessionError::NothingToUndo);
        }
        let mut actions = self.log.clone();
        actions.pop();
        let replayed = Self::replay(
            self.dataset.clone(),
            self.file_name.clone(),
            self.selection.clone(),
            self.seed,
            actions,
        )?;
        *self = replayed;
        Ok(())
    }

    /// Either direction of the average/threshold mapping for one node and attribute.
    pub fn duality(
        &self,
        node: NodeId,
        attribute: &str,
        query: &DualityQuery,
    ) -> Result<DualityResult, QueryError> {
        let node = self.taxonomy.node(node)?;
        let column = self
            .dataset
            .column_index(attribute)
            .ok_or_else(|| QueryError::UnknownAttribute(attribute.to_string()))?;
        if self.dataset.column(column).kind != ColumnKind::Numeric {
            return Err(QueryError::NonNumericAttribute(attribute.to_string()));
        }
        if node.extension.is_empty() {
            return Err(QueryError::EmptyNode(node.id));
        }
        let values = numeric_values(&self.dataset, &node.extension, column).expect("numeric column");
        Ok(match query {
            DualityQuery::TargetMean { target_mean } => threshold_for_average(&values, *target_mean)?,
            DualityQuery::Threshold { threshold, side } => average_for_threshold(&values, *threshold, *side)?,
        })
    }
}
