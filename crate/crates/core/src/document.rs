//! Session documents (`.tabiic.json`) and action scripts.
//!
//! A document stores the dataset fingerprint, the replayable action log and a
//! snapshot of the resulting tree. Importing replays the log and refuses the
//! document if the result differs from the stored snapshot.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::clustering::DEFAULT_SEED;
use crate::dataset::{select_attributes, Dataset, SelectionError};
use crate::session::{Action, Session, SessionError};
use crate::views::NodeView;

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub file_name: String,
    pub rows: usize,
    pub columns: usize,
    pub content_hash: String,
}

impl DatasetFingerprint {
    pub fn of(dataset: &Dataset, file_name: &str) -> Self {
        Self {
            file_name: file_name.to_string(),
            rows: dataset.len(),
            columns: dataset.columns().len(),
            content_hash: dataset.content_hash().to_string(),
        }
    }

    /// File names are informational; counts and content must agree.
    pub fn matches(&self, other: &Self) -> bool {
        self.rows == other.rows && self.columns == other.columns && self.content_hash == other.content_hash
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDocument {
    pub format_version: String,
    pub dataset: DatasetFingerprint,
    pub selection: Vec<String>,
    pub clustering_seed: u64,
    pub actions: Vec<Action>,
    pub snapshot: Vec<NodeView>,
}

impl SessionDocument {
    pub fn of(session: &Session) -> Self {
        Self {
            format_version: FORMAT_VERSION.to_string(),
            dataset: DatasetFingerprint::of(session.dataset(), session.file_name()),
            selection: session.selection().names().to_vec(),
            clustering_seed: session.seed(),
            actions: session.log().to_vec(),
            snapshot: snapshot(session),
        }
    }
}

fn snapshot(session: &Session) -> Vec<NodeView> {
    session.taxonomy().preorder().into_iter().map(NodeView::from).collect()
}

/// Object keys sorted at every level.
pub fn canonicalize(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, canonicalize(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        other => other,
    }
}

/// Pretty-printed JSON with sorted keys and a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let value = canonicalize(serde_json::to_value(value).expect("serializable"));
    let mut text = serde_json::to_string_pretty(&value).expect("serializable");
    text.push('\n');
    text
}

pub fn export_session(session: &Session) -> String {
    to_canonical_json(&SessionDocument::of(session))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImportError {
    #[error("malformed session document: {0}")]
    Malformed(String),
    #[error("unsupported format_version {0:?}")]
    UnknownFormatVersion(String),
    #[error("the document was made for {expected:?} ({rows} rows), not this dataset")]
    FingerprintMismatch { expected: String, rows: usize },
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Replay(#[from] SessionError),
    #[error("replaying the action log does not reproduce the stored snapshot")]
    ReplayDivergence,
}

impl ImportError {
    pub fn code(&self) -> &'static str {
        match self {
            ImportError::Malformed(_) => "malformed_document",
            ImportError::UnknownFormatVersion(_) => "unknown_format_version",
            ImportError::FingerprintMismatch { .. } => "fingerprint_mismatch",
            ImportError::Selection(_) => "invalid_selection",
            ImportError::Replay(_) => "replay_failed",
            ImportError::ReplayDivergence => "replay_divergence",
        }
    }
}

pub fn import_session(text: &str, dataset: Arc<Dataset>) -> Result<Session, ImportError> {
    let raw: Value = serde_json::from_str(text).map_err(|e| ImportError::Malformed(e.to_string()))?;
    let version = raw.get("format_version").and_then(Value::as_str).unwrap_or_default().to_string();
    if version != FORMAT_VERSION {
        return Err(ImportError::UnknownFormatVersion(version));
    }
    let doc: SessionDocument =
        serde_json::from_value(raw).map_err(|e| ImportError::Malformed(e.to_string()))?;
    if !doc.dataset.matches(&DatasetFingerprint::of(&dataset, &doc.dataset.file_name)) {
        return Err(ImportError::FingerprintMismatch {
            expected: doc.dataset.file_name.clone(),
            rows: doc.dataset.rows,
        });
    }
    let selection = select_attributes(&dataset, Some(&doc.selection))?;
    let session =
        Session::replay(dataset, doc.dataset.file_name.clone(), selection, doc.clustering_seed, doc.actions)?;
    if snapshot(&session) != doc.snapshot {
        return Err(ImportError::ReplayDivergence);
    }
    Ok(session)
}

/// Replayable script: an action log plus optional selection and seed.
/// A session document is also a valid script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionScript {
    #[serde(default)]
    pub selection: Option<Vec<String>>,
    #[serde(default, alias = "clustering_seed")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub actions: Vec<Action>,
}

impl ActionScript {
    pub fn seed_or_default(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}
