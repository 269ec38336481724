//! Delimited-text ingestion into an immutable, typed [`Dataset`].
//!
//! Rows with a missing value in any column are dropped at load time, column
//! kinds are inferred from the surviving values, and identifier-like columns
//! are tagged so that they never take part in conditions, clustering or
//! statistics.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::rowset::RowSet;

/// Distinct-value ratio at or above which a text column is treated as an identifier.
pub const IDENTIFIER_DISTINCT_RATIO: f64 = 0.95;

const DEFAULT_MISSING_MARKERS: [&str; 4] = ["", "NA", "NaN", "null"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    pub delimiter: u8,
    /// Compared case-insensitively against trimmed cell contents.
    pub missing_markers: Vec<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            missing_markers: DEFAULT_MISSING_MARKERS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl LoadOptions {
    /// Parses a comma-separated marker list as given on the command line.
    pub fn with_missing_markers(mut self, list: &str) -> Self {
        self.missing_markers = list.split(',').map(|s| s.trim().to_string()).collect();
        self
    }

    fn is_missing(&self, cell: &str) -> bool {
        let cell = cell.trim();
        self.missing_markers.iter().any(|m| m.eq_ignore_ascii_case(cell))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LoadError {
    #[error("the file is empty")]
    Empty,
    #[error("the file has a header row but no data rows")]
    HeaderOnly,
    #[error("row {line} has {found} fields, expected {expected}")]
    Ragged { line: u64, expected: usize, found: usize },
    #[error("no rows survive missing-value filtering ({dropped} rows dropped)")]
    NoCompleteRows { dropped: usize },
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("malformed delimited text: {0}")]
    Malformed(String),
}

impl LoadError {
    pub fn code(&self) -> &'static str {
        match self {
            LoadError::Empty => "empty_dataset",
            LoadError::HeaderOnly => "header_only",
            LoadError::Ragged { .. } => "ragged_row",
            LoadError::NoCompleteRows { .. } => "no_complete_rows",
            LoadError::DuplicateColumn(_) => "duplicate_column",
            LoadError::Malformed(_) => "malformed_csv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Nominal,
    Identifier,
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Nominal => "nominal",
            ColumnKind::Identifier => "identifier",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    Numeric { min: f64, max: f64 },
    /// Sorted distinct values.
    Nominal { values: Vec<String> },
    Identifier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
    pub domain: Domain,
}

impl ColumnMeta {
    pub fn nominal_values(&self) -> Option<&[String]> {
        match &self.domain {
            Domain::Nominal { values } => Some(values),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ColumnData {
    Numeric(Vec<f64>),
    /// Codes index into the column's sorted nominal domain.
    Nominal(Vec<u32>),
    Text(Vec<String>),
}

/// A borrowed cell value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value<'a> {
    Number(f64),
    Text(&'a str),
}

impl fmt::Display for Value<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(x) => write!(f, "{x}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

/// Immutable table of typed columns. Row ids are the dense indices `0..len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<ColumnMeta>,
    data: Vec<ColumnData>,
    len: usize,
    source_rows: usize,
    content_hash: String,
}

/// Decides the kind of a column from its non-missing raw values.
pub fn infer_column_kind(values: &[&str], name: &str) -> ColumnKind {
    let lower = name.trim().to_ascii_lowercase();
    if matches!(lower.as_str(), "id" | "name" | "identifier") || lower.ends_with("_id") {
        return ColumnKind::Identifier;
    }
    if !values.is_empty() && values.iter().all(|v| parse_number(v).is_some()) {
        return ColumnKind::Numeric;
    }
    let distinct: BTreeSet<&str> = values.iter().copied().collect();
    if !values.is_empty() && distinct.len() as f64 / values.len() as f64 >= IDENTIFIER_DISTINCT_RATIO
    {
        return ColumnKind::Identifier;
    }
    ColumnKind::Nominal
}

fn parse_number(raw: &str) -> Option<f64> {
    raw.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Parses delimited text with a header row into a [`Dataset`].
pub fn load_dataset(bytes: &[u8], options: &LoadOptions) -> Result<Dataset, LoadError> {
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(LoadError::Empty);
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);

    let header: Vec<String> = reader
        .headers()
        .map_err(|e| LoadError::Malformed(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut seen = BTreeSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(LoadError::DuplicateColumn(h.clone()));
        }
    }

    let mut retained: Vec<Vec<String>> = Vec::new();
    let mut source_rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| LoadError::Malformed(e.to_string()))?;
        source_rows += 1;
        if record.len() != header.len() {
            let line = record.position().map(|p| p.line()).unwrap_or(source_rows as u64 + 1);
            return Err(LoadError::Ragged { line, expected: header.len(), found: record.len() });
        }
        if record.iter().any(|cell| options.is_missing(cell)) {
            continue;
        }
        retained.push(record.iter().map(|c| c.trim().to_string()).collect());
    }
    if source_rows == 0 {
        return Err(LoadError::HeaderOnly);
    }
    if retained.is_empty() {
        return Err(LoadError::NoCompleteRows { dropped: source_rows });
    }

    let mut columns = Vec::with_capacity(header.len());
    let mut data = Vec::with_capacity(header.len());
    for (c, name) in header.iter().enumerate() {
        let raw: Vec<&str> = retained.iter().map(|row| row[c].as_str()).collect();
        let kind = infer_column_kind(&raw, name);
        let (domain, column) = match kind {
            ColumnKind::Numeric => {
                let xs: Vec<f64> = raw.iter().map(|v| parse_number(v).unwrap()).collect();
                let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
                let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (Domain::Numeric { min, max }, ColumnData::Numeric(xs))
            }
            ColumnKind::Nominal => {
                let values: Vec<String> =
                    raw.iter().copied().collect::<BTreeSet<&str>>().into_iter().map(String::from).collect();
                let index: HashMap<&str, u32> =
                    values.iter().enumerate().map(|(i, v)| (v.as_str(), i as u32)).collect();
                let codes = raw.iter().map(|v| index[v]).collect();
                (Domain::Nominal { values }, ColumnData::Nominal(codes))
            }
            ColumnKind::Identifier => (
                Domain::Identifier,
                ColumnData::Text(raw.iter().map(|s| s.to_string()).collect()),
            ),
        };
        columns.push(ColumnMeta { name: name.clone(), kind, domain });
        data.push(column);
    }

    Ok(Dataset {
        columns,
        data,
        len: retained.len(),
        source_rows,
        content_hash: hex_digest(bytes),
    })
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Dataset {
    pub fn columns(&self) -> &[ColumnMeta] {
        &self.columns
    }

    pub fn column(&self, index: usize) -> &ColumnMeta {
        &self.columns[index]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Number of retained rows.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of data rows in the source file before filtering.
    pub fn source_rows(&self) -> usize {
        self.source_rows
    }

    /// SHA-256 of the raw file contents, lowercase hex.
    pub fn content_hash(&self) -> &str {
        &self.content_hash
    }

    pub fn all_rows(&self) -> RowSet {
        RowSet::full(self.len)
    }

    pub fn value(&self, row: u32, column: usize) -> Value<'_> {
        let r = row as usize;
        match &self.data[column] {
            ColumnData::Numeric(xs) => Value::Number(xs[r]),
            ColumnData::Nominal(codes) => {
                let values = self.columns[column].nominal_values().expect("nominal domain");
                Value::Text(&values[codes[r] as usize])
            }
            ColumnData::Text(xs) => Value::Text(&xs[r]),
        }
    }

    pub fn numeric(&self, row: u32, column: usize) -> Option<f64> {
        match &self.data[column] {
            ColumnData::Numeric(xs) => Some(xs[row as usize]),
            _ => None,
        }
    }

    /// Nominal value code (index into the sorted domain).
    pub fn nominal_code(&self, row: u32, column: usize) -> Option<u32> {
        match &self.data[column] {
            ColumnData::Nominal(codes) => Some(codes[row as usize]),
            _ => None,
        }
    }

    pub fn row(&self, row: u32) -> Vec<Value<'_>> {
        (0..self.columns.len()).map(|c| self.value(row, c)).collect()
    }

    /// Serializes the retained rows back to delimited text.
    pub fn to_csv(&self, delimiter: u8) -> String {
        let mut writer = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
        writer.write_record(self.columns.iter().map(|c| c.name.as_str())).expect("in-memory write");
        for r in 0..self.len as u32 {
            let cells: Vec<String> = self.row(r).iter().map(|v| v.to_string()).collect();
            writer.write_record(&cells).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SelectionError {
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("attribute {0:?} is an identifier and cannot be selected")]
    IdentifierSelected(String),
    #[error("at least one attribute must be selected")]
    Empty,
}

impl SelectionError {
    pub fn code(&self) -> &'static str {
        match self {
            SelectionError::UnknownAttribute(_) => "unknown_attribute",
            SelectionError::IdentifierSelected(_) => "identifier_selected",
            SelectionError::Empty => "no_attributes_selected",
        }
    }
}

/// The working attribute set, kept in column order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSelection {
    columns: Vec<usize>,
    names: Vec<String>,
}

impl AttributeSelection {
    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn contains(&self, column: usize) -> bool {
        self.columns.contains(&column)
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

/// Selects the working attributes; `None` selects every non-identifier column.
pub fn select_attributes(
    dataset: &Dataset,
    names: Option<&[String]>,
) -> Result<AttributeSelection, SelectionError> {
    let mut columns: Vec<usize> = match names {
        None => dataset
            .columns()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind != ColumnKind::Identifier)
            .map(|(i, _)| i)
            .collect(),
        Some(names) => {
            let mut picked = Vec::with_capacity(names.len());
            for name in names {
                let idx = dataset
                    .column_index(name)
                    .ok_or_else(|| SelectionError::UnknownAttribute(name.clone()))?;
                if dataset.column(idx).kind == ColumnKind::Identifier {
                    return Err(SelectionError::IdentifierSelected(name.clone()));
                }
                picked.push(idx);
            }
            picked
        }
    };
    columns.sort_unstable();
    columns.dedup();
    if columns.is_empty() {
        return Err(SelectionError::Empty);
    }
    let names = columns.iter().map(|&c| dataset.column(c).name.clone()).collect();
    Ok(AttributeSelection { columns, names })
}
