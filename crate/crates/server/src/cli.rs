//! `run` and `stats`: headless replay, export and dataset profiling.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use tabiic_core::clustering::DEFAULT_SEED;
use tabiic_core::dataset::{ColumnKind, Domain};
use tabiic_core::document::{import_session, ImportError};
use tabiic_core::insight::{profile, Stat};
use tabiic_core::session::SessionError;
use tabiic_core::taxonomy::Taxonomy;
use tabiic_core::{export_owl, export_session, load_dataset, select_attributes, ActionScript, Dataset, LoadOptions, Session};

use crate::api::default_iri;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub exit_code: i32,
    pub message: String,
}

impl CliError {
    fn failure(message: impl Into<String>) -> Self {
        Self { exit_code: 1, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Owl,
    Session,
}

#[derive(Debug, Clone)]
pub struct RunArgs {
    pub dataset: PathBuf,
    pub script: PathBuf,
    pub format: Format,
    /// Used when the script does not fix a seed.
    pub seed: Option<u64>,
    pub iri: Option<String>,
    pub options: LoadOptions,
}

pub struct RunOutput {
    pub session: Session,
    pub export: String,
}

fn read(path: &PathBuf) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::failure(format!("{}: {e}", path.display())))
}

fn file_name(path: &std::path::Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset.csv".into())
}

pub fn load(path: &PathBuf, options: &LoadOptions) -> Result<Dataset, CliError> {
    load_dataset(&read(path)?, options).map_err(|e| CliError::failure(format!("{}: {e} [{}]", path.display(), e.code())))
}

fn replay_error(e: SessionError) -> CliError {
    match e {
        SessionError::Replay { index, source } => {
            CliError::failure(format!("action {index} failed: {source} [{}]", source.code()))
        }
        other => CliError::failure(other.to_string()),
    }
}

/// Replays a script (or a whole session document) against the dataset and exports the result.
pub fn run(args: &RunArgs) -> Result<RunOutput, CliError> {
    let dataset = Arc::new(load(&args.dataset, &args.options)?);
    let text = String::from_utf8(read(&args.script)?)
        .map_err(|_| CliError::failure(format!("{}: not UTF-8", args.script.display())))?;
    let raw: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::failure(format!("{}: {e}", args.script.display())))?;
    let session = if raw.get("format_version").is_some() {
        import_session(&text, dataset).map_err(|e| match e {
            ImportError::Replay(e) => replay_error(e),
            other => CliError::failure(format!("{}: {other} [{}]", args.script.display(), other.code())),
        })?
    } else {
        let script: ActionScript = serde_json::from_value(raw)
            .map_err(|e| CliError::failure(format!("{}: {e}", args.script.display())))?;
        let selection = select_attributes(&dataset, script.selection.as_deref())
            .map_err(|e| CliError::failure(format!("selection: {e}")))?;
        let seed = script.seed.or(args.seed).unwrap_or(DEFAULT_SEED);
        Session::replay(dataset, file_name(&args.dataset), selection, seed, script.actions).map_err(replay_error)?
    };
    let export = match args.format {
        Format::Owl => {
            let iri = args.iri.clone().unwrap_or_else(|| default_iri(session.file_name()));
            export_owl(session.taxonomy(), session.dataset(), &iri).map_err(|e| CliError::failure(e.to_string()))?
        }
        Format::Session => export_session(&session),
    };
    Ok(RunOutput { session, export })
}

/// Indented outline: id, label or origin, size and own conditions.
pub fn outline(taxonomy: &Taxonomy) -> String {
    let mut out = String::new();
    fn walk(t: &Taxonomy, id: u32, depth: usize, out: &mut String) {
        let n = t.node(id).expect("node exists");
        let name = n.label.clone().unwrap_or_else(|| format!("({:?})", n.origin).to_lowercase());
        let conds: Vec<String> = n.intension.iter().map(|c| c.to_string()).collect();
        let _ = write!(out, "{}#{} {} [{}]", "  ".repeat(depth), n.id, name, n.extension.len());
        if !conds.is_empty() {
            let _ = write!(out, "  {}", conds.join(" AND "));
        }
        out.push('\n');
        for &c in &n.children {
            walk(t, c, depth + 1, out);
        }
    }
    walk(taxonomy, taxonomy.root_id(), 0, &mut out);
    out
}

/// Column kinds, retained-row count and per-column statistics.
pub fn stats(path: &PathBuf, options: &LoadOptions) -> Result<String, CliError> {
    let ds = load(path, options)?;
    let mut out = String::new();
    let count = |k: ColumnKind| ds.columns().iter().filter(|c| c.kind == k).count();
    let _ = writeln!(
        out,
        "{}: {} rows kept of {} ({} numeric, {} nominal, {} identifier columns)",
        file_name(path),
        ds.len(),
        ds.source_rows(),
        count(ColumnKind::Numeric),
        count(ColumnKind::Nominal),
        count(ColumnKind::Identifier)
    );
    let profiles = match select_attributes(&ds, None) {
        Ok(sel) => profile(&ds, &sel, &ds.all_rows(), None),
        Err(_) => Vec::new(),
    };
    let width = ds.columns().iter().map(|c| c.name.len()).max().unwrap_or(0).max(6);
    let _ = writeln!(out, "{:<width$}  {:<10}  summary", "column", "kind");
    for meta in ds.columns() {
        let summary = match (&meta.domain, profiles.iter().find(|p| p.attribute == meta.name).map(|p| &p.stat)) {
            (Domain::Numeric { min, max }, Some(Stat::Numeric { mean, std })) => {
                format!("mean {mean:.4} ± {std:.4}, range [{min}, {max}]")
            }
            (Domain::Nominal { values }, Some(Stat::Nominal { mode, frequency })) => {
                format!("{} values, mode {mode} ({:.1}%)", values.len(), frequency * 100.0)
            }
            _ => "excluded from clustering".to_string(),
        };
        let kind = format!("{:?}", meta.kind).to_lowercase();
        let _ = writeln!(out, "{:<width$}  {kind:<10}  {summary}", meta.name);
    }
    Ok(out)
}
