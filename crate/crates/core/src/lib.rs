//! Interactive taxonomy building from tabular data.
//!
//! A dataset is loaded once ([`dataset`]); a [`session::Session`] then grows a
//! concept tree from a single root by three user actions: *cut* a leaf into
//! two clusters with 2-means ([`clustering`]), *define* a leaf by an attribute
//! condition, which turns its undefined siblings into one complement node, and
//! *label* any node. [`insight`] ranks attributes for a node against its
//! siblings and maps target averages to thresholds. The finished tree exports
//! to OWL 2 functional syntax ([`owl`]) and sessions round-trip through JSON
//! documents ([`document`]).

pub mod clustering;
pub mod condition;
pub mod dataset;
pub mod document;
pub mod insight;
pub mod owl;
pub mod rowset;
pub mod session;
pub mod taxonomy;
pub mod views;

pub use condition::{compute_extension, Condition};
pub use dataset::{load_dataset, select_attributes, AttributeSelection, ColumnKind, Dataset, LoadOptions};
pub use document::{export_session, import_session, ActionScript, SessionDocument};
pub use owl::export_owl;
pub use rowset::RowSet;
pub use session::{Action, Session};
pub use taxonomy::{NodeId, Origin, Taxonomy};
