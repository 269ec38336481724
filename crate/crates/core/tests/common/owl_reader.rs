//! A small reader for OWL 2 functional-style syntax: enough to parse what the
//! exporter writes and evaluate class expressions as row filters.

use std::collections::BTreeMap;

use tabiic_core::dataset::Value;
use tabiic_core::{Dataset, RowSet};

type ValueTest = Box<dyn Fn(Value<'_>) -> bool>;

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// Prefixed name or keyword such as `:Marvel` or `xsd:decimal`.
    Name(String),
    Iri(String),
    Literal { text: String, datatype: Option<String> },
    Call { head: String, args: Vec<Term> },
}

impl Term {
    pub fn head(&self) -> Option<&str> {
        match self {
            Term::Call { head, .. } => Some(head),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Call { args, .. } => args,
            _ => &[],
        }
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Term::Name(n) => Some(n),
            _ => None,
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    text: &'a str,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(&(_, c)) = self.chars.peek() {
            if c.is_whitespace() {
                self.chars.next();
            } else if c == '#' {
                for (_, c) in self.chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn word(&mut self) -> String {
        let mut out = String::new();
        while let Some(&(_, c)) = self.chars.peek() {
            if c.is_whitespace() || "()<>\"".contains(c) {
                break;
            }
            out.push(c);
            self.chars.next();
        }
        out
    }

    fn term(&mut self) -> Result<Term, String> {
        self.skip_ws();
        let &(pos, c) = self.chars.peek().ok_or("unexpected end of input")?;
        match c {
            '<' => {
                self.chars.next();
                let mut iri = String::new();
                for (_, c) in self.chars.by_ref() {
                    if c == '>' {
                        return Ok(Term::Iri(iri));
                    }
                    iri.push(c);
                }
                Err("unterminated IRI".into())
            }
            '"' => {
                self.chars.next();
                let mut text = String::new();
                loop {
                    match self.chars.next() {
                        Some((_, '\\')) => text.push(self.chars.next().ok_or("bad escape")?.1),
                        Some((_, '"')) => break,
                        Some((_, c)) => text.push(c),
                        None => return Err("unterminated literal".into()),
                    }
                }
                let datatype = if self.text[self.chars.peek().map_or(self.text.len(), |p| p.0)..].starts_with("^^") {
                    self.chars.next();
                    self.chars.next();
                    Some(self.word())
                } else {
                    None
                };
                Ok(Term::Literal { text, datatype })
            }
            '(' | ')' => Err(format!("unexpected {c:?} at byte {pos}")),
            _ => {
                let head = self.word();
                self.skip_ws();
                if matches!(self.chars.peek(), Some((_, '('))) {
                    self.chars.next();
                    let mut args = Vec::new();
                    loop {
                        self.skip_ws();
                        match self.chars.peek() {
                            Some((_, ')')) => {
                                self.chars.next();
                                break;
                            }
                            Some(_) => args.push(self.term()?),
                            None => return Err(format!("unclosed {head}(")),
                        }
                    }
                    Ok(Term::Call { head, args })
                } else {
                    Ok(Term::Name(head))
                }
            }
        }
    }
}

/// Parsed document: prefix declarations and the ontology's axioms.
#[derive(Debug)]
pub struct Document {
    pub prefixes: BTreeMap<String, String>,
    pub ontology_iri: String,
    pub axioms: Vec<Term>,
}

pub fn parse(text: &str) -> Result<Document, String> {
    let mut lexer = Lexer { chars: text.char_indices().peekable(), text };
    let mut prefixes = BTreeMap::new();
    loop {
        let term = lexer.term()?;
        match term.head() {
            Some("Prefix") => {
                // `Prefix(p:=<iri>)` lexes as the name `p:=` followed by an IRI
                let [Term::Name(p), Term::Iri(iri)] = term.args() else {
                    return Err(format!("bad prefix {term:?}"));
                };
                let p = p.strip_suffix('=').ok_or("prefix without =")?;
                if prefixes.insert(p.to_string(), iri.clone()).is_some() {
                    return Err(format!("duplicate prefix {p}"));
                }
            }
            Some("Ontology") => {
                let mut args = term.args().to_vec().into_iter();
                let Some(Term::Iri(ontology_iri)) = args.next() else {
                    return Err("ontology without IRI".into());
                };
                lexer.skip_ws();
                if lexer.chars.peek().is_some() {
                    return Err("trailing content after Ontology(...)".into());
                }
                let axioms: Vec<Term> = args.collect();
                if let Some(bad) = axioms.iter().find(|a| a.head().is_none()) {
                    return Err(format!("non-axiom {bad:?} in ontology"));
                }
                return Ok(Document { prefixes, ontology_iri, axioms });
            }
            _ => return Err(format!("unexpected top-level term {term:?}")),
        }
    }
}

impl Document {
    pub fn axioms<'a>(&'a self, head: &'a str) -> impl Iterator<Item = &'a Term> + 'a {
        self.axioms.iter().filter(move |a| a.head() == Some(head))
    }

    pub fn declared(&self, kind: &str) -> Vec<String> {
        self.axioms("Declaration")
            .filter_map(|d| match d.args() {
                [Term::Call { head, args }] if head == kind => args.first().and_then(Term::name).map(String::from),
                _ => None,
            })
            .collect()
    }

    /// Checks that every prefixed name uses a declared prefix.
    pub fn check_prefixes(&self) -> Result<(), String> {
        fn walk(t: &Term, prefixes: &BTreeMap<String, String>) -> Result<(), String> {
            let check = |n: &str| match n.split_once(':') {
                Some((p, _)) if !prefixes.contains_key(&format!("{p}:")) => Err(format!("undeclared prefix in {n}")),
                _ => Ok(()),
            };
            match t {
                Term::Name(n) => check(n),
                Term::Literal { datatype: Some(d), .. } => check(d),
                Term::Call { head, args } => {
                    check(head)?;
                    args.iter().try_for_each(|a| walk(a, prefixes))
                }
                _ => Ok(()),
            }
        }
        self.axioms.iter().try_for_each(|a| walk(a, &self.prefixes))
    }

    /// The defining equivalence of each class: `EquivalentClasses(C ObjectIntersectionOf(...))`.
    pub fn definitions(&self) -> BTreeMap<String, Term> {
        self.axioms("EquivalentClasses")
            .filter_map(|a| match a.args() {
                [Term::Name(c), expr] if expr.head() == Some("ObjectIntersectionOf") => Some((c.clone(), expr.clone())),
                _ => None,
            })
            .collect()
    }

    /// Covering axioms: `EquivalentClasses(P ObjectUnionOf(children...))`.
    pub fn coverings(&self) -> BTreeMap<String, Vec<String>> {
        self.axioms("EquivalentClasses")
            .filter_map(|a| match a.args() {
                [Term::Name(c), expr] if expr.head() == Some("ObjectUnionOf") => Some((
                    c.clone(),
                    expr.args().iter().filter_map(Term::name).map(String::from).collect(),
                )),
                _ => None,
            })
            .collect()
    }
}

/// Evaluates class expressions against a dataset. Named classes resolve through
/// their defining equivalence; a class without one (the root) denotes every row.
pub struct Evaluator<'a> {
    pub doc: &'a Document,
    pub dataset: &'a Dataset,
    definitions: BTreeMap<String, Term>,
}

impl<'a> Evaluator<'a> {
    pub fn new(doc: &'a Document, dataset: &'a Dataset) -> Self {
        Self { doc, dataset, definitions: doc.definitions() }
    }

    fn property_column(&self, name: &str) -> Result<usize, String> {
        let local = name.strip_prefix(':').ok_or_else(|| format!("property {name} outside the default prefix"))?;
        self.dataset.column_index(local).ok_or_else(|| format!("property {name} names no column"))
    }

    pub fn class(&self, name: &str, depth: usize) -> Result<RowSet, String> {
        if depth > 64 {
            return Err(format!("definition cycle through {name}"));
        }
        match self.definitions.get(name) {
            Some(expr) => self.eval(expr, depth + 1),
            None => Ok(self.dataset.all_rows()),
        }
    }

    pub fn eval(&self, expr: &Term, depth: usize) -> Result<RowSet, String> {
        let all = self.dataset.all_rows();
        match expr {
            Term::Name(n) => self.class(n, depth),
            Term::Call { head, args } => match head.as_str() {
                "ObjectIntersectionOf" => args.iter().try_fold(all, |acc, a| Ok(acc.intersection(&self.eval(a, depth)?))),
                "ObjectUnionOf" => args.iter().try_fold(RowSet::empty(), |acc, a| Ok(acc.union(&self.eval(a, depth)?))),
                "ObjectComplementOf" => match args.as_slice() {
                    [inner] => Ok(all.difference(&self.eval(inner, depth)?)),
                    _ => Err("ObjectComplementOf takes one operand".into()),
                },
                "DataSomeValuesFrom" => {
                    let [Term::Name(prop), range] = args.as_slice() else {
                        return Err(format!("bad DataSomeValuesFrom {args:?}"));
                    };
                    let column = self.property_column(prop)?;
                    let test = self.data_range(range)?;
                    Ok(all.filter(|r| test(self.dataset.value(r, column))))
                }
                other => Err(format!("unsupported class expression {other}")),
            },
            other => Err(format!("unexpected term {other:?}")),
        }
    }

    fn data_range(&self, range: &Term) -> Result<ValueTest, String> {
        match (range.head(), range.args()) {
            (Some("DataOneOf"), literals) => {
                let values: Vec<String> = literals
                    .iter()
                    .map(|l| match l {
                        Term::Literal { text, datatype: None } => Ok(text.clone()),
                        other => Err(format!("bad DataOneOf member {other:?}")),
                    })
                    .collect::<Result<_, _>>()?;
                Ok(Box::new(move |v| matches!(v, Value::Text(s) if values.iter().any(|x| x == s))))
            }
            (Some("DatatypeRestriction"), [Term::Name(dt), Term::Name(facet), Term::Literal { text, datatype }]) => {
                if dt != "xsd:decimal" || datatype.as_deref() != Some("xsd:decimal") {
                    return Err(format!("restriction not on xsd:decimal: {range:?}"));
                }
                if text.contains(['e', 'E']) {
                    return Err(format!("{text} is not an xsd:decimal lexical form"));
                }
                let bound: f64 = text.parse().map_err(|_| format!("bad decimal {text}"))?;
                match facet.as_str() {
                    "xsd:maxInclusive" => Ok(Box::new(move |v| matches!(v, Value::Number(x) if x <= bound))),
                    "xsd:minExclusive" => Ok(Box::new(move |v| matches!(v, Value::Number(x) if x > bound))),
                    other => Err(format!("unsupported facet {other}")),
                }
            }
            _ => Err(format!("unsupported data range {range:?}")),
        }
    }
}
