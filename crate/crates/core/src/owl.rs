//! OWL 2 Functional-Style Syntax export.
//!
//! One class per node. Defined nodes (and complements that reduce to a
//! positive condition) become equivalent to the intersection of their parent
//! and their conditions; other complements to the parent minus the union of
//! their defined siblings; clusters stay primitive and carry an origin
//! annotation. Every sibling group of two or more is declared disjoint, and
//! covered by its parent when all its members are defined.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::condition::Condition;
use crate::dataset::Dataset;
use crate::taxonomy::{NodeId, Origin, Taxonomy};

pub const ORIGIN_ANNOTATION: &str = "tabiic:origin";
const VOCAB_IRI: &str = "https://w3id.org/tabiic/vocab#";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OwlError {
    #[error("{0:?} is not an absolute IRI")]
    InvalidIri(String),
}

impl OwlError {
    pub fn code(&self) -> &'static str {
        match self {
            OwlError::InvalidIri(_) => "invalid_iri",
        }
    }
}

fn validate_iri(iri: &str) -> Result<(), OwlError> {
    let bad = || OwlError::InvalidIri(iri.to_string());
    let (scheme, rest) = iri.split_once(':').ok_or_else(bad)?;
    let mut chars = scheme.chars();
    let scheme_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    let rest_ok = !rest.is_empty()
        && !rest.chars().any(|c| c.is_whitespace() || c.is_control() || "<>\"{}|^`\\".contains(c));
    if scheme_ok && rest_ok {
        Ok(())
    } else {
        Err(bad())
    }
}

/// Turns a label into an IRI local name: whitespace runs become `_`, anything
/// outside the unreserved set is percent-encoded.
pub fn local_name(text: &str) -> String {
    let mut out = String::new();
    let mut in_space = false;
    for c in text.trim().chars() {
        if c.is_whitespace() {
            if !in_space {
                out.push('_');
            }
            in_space = true;
            continue;
        }
        in_space = false;
        if c.is_ascii_alphanumeric() || matches!(c, '-' | '.' | '_' | '~') {
            out.push(c);
        } else {
            let mut buf = [0u8; 4];
            for b in c.encode_utf8(&mut buf).bytes() {
                let _ = write!(out, "%{b:02X}");
            }
        }
    }
    out
}

fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        if matches!(c, '"' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn decimal(x: f64) -> String {
    // Display never uses exponent notation, which xsd:decimal forbids
    format!("\"{x}\"^^xsd:decimal")
}

struct Names {
    classes: BTreeMap<NodeId, String>,
    properties: BTreeMap<String, String>,
}

impl Names {
    fn new(taxonomy: &Taxonomy, dataset: &Dataset) -> Self {
        let mut taken = BTreeSet::new();
        let used: BTreeSet<&str> = taxonomy
            .nodes()
            .flat_map(|n| n.intension.iter().flat_map(Condition::attributes))
            .collect();
        let mut properties = BTreeMap::new();
        for meta in dataset.columns().iter().filter(|m| used.contains(m.name.as_str())) {
            let mut name = local_name(&meta.name);
            if name.is_empty() || !taken.insert(name.clone()) {
                name = format!("attr_{}", taken.len());
                taken.insert(name.clone());
            }
            properties.insert(meta.name.clone(), name);
        }
        let mut classes = BTreeMap::new();
        for node in taxonomy.preorder() {
            let base = match &node.label {
                Some(label) if !local_name(label).is_empty() => local_name(label),
                _ => format!("Concept_{}", node.id),
            };
            let mut name = base.clone();
            if taken.contains(&name) {
                name = format!("{base}_{}", node.id);
            }
            while taken.contains(&name) {
                name.push('_');
            }
            taken.insert(name.clone());
            classes.insert(node.id, name);
        }
        Self { classes, properties }
    }

    fn class(&self, id: NodeId) -> String {
        format!(":{}", self.classes[&id])
    }

    fn property(&self, attribute: &str) -> String {
        format!(":{}", self.properties[attribute])
    }

    fn restriction(&self, cond: &Condition) -> String {
        match cond {
            Condition::In { attribute, values } => {
                let literals: Vec<String> = values.iter().map(|v| quote(v)).collect();
                format!("DataSomeValuesFrom({} DataOneOf({}))", self.property(attribute), literals.join(" "))
            }
            Condition::Leq { attribute, threshold } => format!(
                "DataSomeValuesFrom({} DatatypeRestriction(xsd:decimal xsd:maxInclusive {}))",
                self.property(attribute),
                decimal(*threshold)
            ),
            Condition::Gt { attribute, threshold } => format!(
                "DataSomeValuesFrom({} DatatypeRestriction(xsd:decimal xsd:minExclusive {}))",
                self.property(attribute),
                decimal(*threshold)
            ),
            Condition::Not { of } => {
                let alternatives: Vec<String> = of.iter().map(|conj| self.conjunction(conj)).collect();
                format!("ObjectComplementOf({})", nary("ObjectUnionOf", alternatives))
            }
        }
    }

    fn conjunction(&self, conds: &[Condition]) -> String {
        nary("ObjectIntersectionOf", conds.iter().map(|c| self.restriction(c)).collect())
    }
}

/// Wraps the operands in `op(...)` unless there is only one.
fn nary(op: &str, mut operands: Vec<String>) -> String {
    if operands.len() == 1 {
        operands.pop().unwrap()
    } else {
        format!("{op}({})", operands.join(" "))
    }
}

fn is_defined(origin: Origin, intension: &[Condition]) -> bool {
    origin == Origin::Defined
        || (origin == Origin::Complement && !intension.iter().any(Condition::is_negation))
}

/// Renders the taxonomy as an OWL 2 ontology in functional-style syntax.
pub fn export_owl(taxonomy: &Taxonomy, dataset: &Dataset, ontology_iri: &str) -> Result<String, OwlError> {
    validate_iri(ontology_iri)?;
    let names = Names::new(taxonomy, dataset);
    let base = if ontology_iri.ends_with('#') || ontology_iri.ends_with('/') {
        ontology_iri.to_string()
    } else {
        format!("{ontology_iri}#")
    };
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(format!("Prefix(:=<{base}>)"));
    line("Prefix(owl:=<http://www.w3.org/2002/07/owl#>)".into());
    line("Prefix(rdf:=<http://www.w3.org/1999/02/22-rdf-syntax-ns#>)".into());
    line("Prefix(rdfs:=<http://www.w3.org/2000/01/rdf-schema#>)".into());
    line("Prefix(xml:=<http://www.w3.org/XML/1998/namespace>)".into());
    line("Prefix(xsd:=<http://www.w3.org/2001/XMLSchema#>)".into());
    line(format!("Prefix(tabiic:=<{VOCAB_IRI}>)"));
    line(String::new());
    line(format!("Ontology(<{ontology_iri}>"));
    line(format!("Declaration(AnnotationProperty({ORIGIN_ANNOTATION}))"));
    let nodes = taxonomy.preorder();
    for node in &nodes {
        line(format!("Declaration(Class({}))", names.class(node.id)));
    }
    for prop in names.properties.values() {
        line(format!("Declaration(DataProperty(:{prop}))"));
    }
    for node in &nodes {
        let class = names.class(node.id);
        if let Some(label) = &node.label {
            line(format!("AnnotationAssertion(rdfs:label {class} {})", quote(label)));
        }
        if node.origin == Origin::Cluster {
            line(format!("AnnotationAssertion({ORIGIN_ANNOTATION} {class} \"cluster\")"));
        }
        let Some(parent) = node.parent else { continue };
        let parent_class = names.class(parent);
        line(format!("SubClassOf({class} {parent_class})"));
        if is_defined(node.origin, &node.intension) {
            let mut operands = vec![parent_class];
            operands.extend(node.intension.iter().map(|c| names.restriction(c)));
            line(format!("EquivalentClasses({class} ObjectIntersectionOf({}))", operands.join(" ")));
        } else if node.origin == Origin::Complement {
            let defined: Vec<String> = taxonomy
                .siblings(node.id)
                .into_iter()
                .filter(|s| s.origin == Origin::Defined)
                .map(|s| names.class(s.id))
                .collect();
            line(format!(
                "EquivalentClasses({class} ObjectIntersectionOf({parent_class} ObjectComplementOf({})))",
                nary("ObjectUnionOf", defined)
            ));
        }
    }
    for node in &nodes {
        if node.children.len() < 2 {
            continue;
        }
        let children: Vec<String> = node.children.iter().map(|c| names.class(*c)).collect();
        line(format!("DisjointClasses({})", children.join(" ")));
        let all_defined = node.children.iter().all(|c| {
            let child = taxonomy.node(*c).expect("child exists");
            matches!(child.origin, Origin::Defined | Origin::Complement)
        });
        if all_defined {
            line(format!("EquivalentClasses({} ObjectUnionOf({}))", names.class(node.id), children.join(" ")));
        }
    }
    line(")".into());
    Ok(out)
}
