//! Taxonomy explorer for the browser.
//!
//! [`Explorer`] is plain Rust so it can be tested natively; on `wasm32` the
//! `bindings` module wraps it for JavaScript. Every call takes and returns
//! JSON text in the same shapes the HTTP service uses.

use std::sync::Arc;

use serde::Serialize;
use tabiic_core::session::{DualityQuery, SessionError};
use tabiic_core::views::{NodeDetail, TreeView};
use tabiic_core::{export_owl, export_session, load_dataset, select_attributes, Action, LoadOptions, NodeId, Session};

pub const IRIS_CSV: &str = include_str!("../../../data/iris.csv");
const IRIS_SELECTION: [&str; 4] = ["sepal_length", "sepal_width", "petal_length", "petal_width"];
const SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub code: String,
    pub message: String,
}

impl Failure {
    fn new(code: &str, message: impl ToString) -> Self {
        Self { code: code.into(), message: message.to_string() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

impl From<SessionError> for Failure {
    fn from(e: SessionError) -> Self {
        Failure::new(e.code(), e)
    }
}

#[derive(Serialize)]
struct Step<'a> {
    tree: TreeView,
    warning: Option<&'a str>,
    created: &'a [NodeId],
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable")
}

pub struct Explorer {
    session: Session,
}

impl Explorer {
    /// Loads CSV text; `selection` of `None` picks every numeric and nominal column.
    pub fn new(csv: &str, file_name: &str, selection: Option<&[String]>) -> Result<Self, Failure> {
        let ds = load_dataset(csv.as_bytes(), &LoadOptions::default()).map_err(|e| Failure::new(e.code(), &e))?;
        let selection = select_attributes(&ds, selection).map_err(|e| Failure::new(e.code(), &e))?;
        Ok(Self { session: Session::new(Arc::new(ds), file_name, selection, SEED) })
    }

    pub fn iris() -> Self {
        let selection: Vec<String> = IRIS_SELECTION.iter().map(|s| s.to_string()).collect();
        Self::new(IRIS_CSV, "iris.csv", Some(&selection)).expect("bundled iris data loads")
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn tree(&self) -> String {
        json(&TreeView::from(self.session.taxonomy()))
    }

    pub fn detail(&self, node: NodeId) -> Result<String, Failure> {
        let detail = NodeDetail::build(&self.session, node).map_err(|e| Failure::new(e.code(), &e))?;
        Ok(json(&detail))
    }

    /// Applies an action given as JSON, e.g. `{"kind":"cut","target":0}`.
    pub fn act(&mut self, action: &str) -> Result<String, Failure> {
        let action: Action = serde_json::from_str(action).map_err(|e| Failure::new("invalid_action", e))?;
        let outcome = self.session.apply(action)?;
        Ok(json(&Step {
            tree: self.session.taxonomy().into(),
            warning: outcome.warning.map(|w| w.code()),
            created: &outcome.created,
        }))
    }

    pub fn cut(&mut self, node: NodeId) -> Result<String, Failure> {
        self.act(&json(&Action::Cut { target: node }))
    }

    pub fn undo(&mut self) -> Result<String, Failure> {
        self.session.undo()?;
        Ok(self.tree())
    }

    /// Threshold whose selected rows average closest to `target_mean`.
    pub fn duality(&self, node: NodeId, attribute: &str, target_mean: f64) -> Result<String, Failure> {
        let result = self
            .session
            .duality(node, attribute, &DualityQuery::TargetMean { target_mean })
            .map_err(|e| Failure::new(e.code(), &e))?;
        Ok(json(&result))
    }

    pub fn export_owl(&self, iri: &str) -> Result<String, Failure> {
        export_owl(self.session.taxonomy(), self.session.dataset(), iri).map_err(|e| Failure::new(e.code(), &e))
    }

    pub fn export_session(&self) -> String {
        export_session(&self.session)
    }
}

#[cfg(target_arch = "wasm32")]
mod bindings {
    use wasm_bindgen::prelude::*;

    use super::{Explorer, Failure};

    fn js(r: Result<String, Failure>) -> Result<String, JsValue> {
        r.map_err(|f| JsValue::from_str(&f.to_json()))
    }

    /// JavaScript handle. Errors are thrown as `{"code", "message"}` JSON strings.
    #[wasm_bindgen(js_name = Explorer)]
    pub struct JsExplorer(Explorer);

    #[wasm_bindgen(js_class = Explorer)]
    impl JsExplorer {
        /// Starts on the bundled iris data.
        #[wasm_bindgen(constructor)]
        pub fn new() -> JsExplorer {
            JsExplorer(Explorer::iris())
        }

        /// Starts on user CSV text with every usable column selected.
        #[wasm_bindgen(js_name = fromCsv)]
        pub fn from_csv(csv: &str, file_name: &str) -> Result<JsExplorer, JsValue> {
            Explorer::new(csv, file_name, None).map(JsExplorer).map_err(|f| JsValue::from_str(&f.to_json()))
        }

        pub fn tree(&self) -> String {
            self.0.tree()
        }

        pub fn detail(&self, node: u32) -> Result<String, JsValue> {
            js(self.0.detail(node))
        }

        pub fn cut(&mut self, node: u32) -> Result<String, JsValue> {
            js(self.0.cut(node))
        }

        pub fn act(&mut self, action: &str) -> Result<String, JsValue> {
            js(self.0.act(action))
        }

        pub fn undo(&mut self) -> Result<String, JsValue> {
            js(self.0.undo())
        }

        pub fn duality(&self, node: u32, attribute: &str, target_mean: f64) -> Result<String, JsValue> {
            js(self.0.duality(node, attribute, target_mean))
        }

        #[wasm_bindgen(js_name = exportOwl)]
        pub fn export_owl(&self, iri: &str) -> Result<String, JsValue> {
            js(self.0.export_owl(iri))
        }

        #[wasm_bindgen(js_name = exportSession)]
        pub fn export_session(&self) -> String {
            self.0.export_session()
        }
    }
}
