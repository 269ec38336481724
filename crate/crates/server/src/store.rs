//! In-memory sessions with write-through session documents.
//!
//! Each session lives in `<data-dir>/<id>/` as the uploaded bytes
//! (`dataset.csv`), the load options (`source.json`) and the session document
//! (`session.tabiic.json`). Restarting the service replays every document.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use tabiic_core::document::import_session;
use tabiic_core::views::DatasetSummary;
use tabiic_core::{export_session, load_dataset, select_attributes, LoadOptions, Session};

use crate::error::ApiError;

const DATASET_FILE: &str = "dataset.csv";
const SOURCE_FILE: &str = "source.json";
const DOCUMENT_FILE: &str = "session.tabiic.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Source {
    file_name: String,
    options: LoadOptions,
}

/// One session: writers are serialized, readers see the last committed state.
pub struct SessionSlot {
    id: String,
    write: Mutex<()>,
    current: RwLock<Arc<Session>>,
    dir: Option<PathBuf>,
}

impl SessionSlot {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn snapshot(&self) -> Arc<Session> {
        self.current.read().expect("session lock poisoned").clone()
    }

    /// Runs `f` on a copy of the session and commits the copy only if `f`
    /// succeeds and the result could be saved.
    pub fn mutate<T>(&self, f: impl FnOnce(&mut Session) -> Result<T, ApiError>) -> Result<(T, Arc<Session>), ApiError> {
        let _guard = self.write.lock().expect("session lock poisoned");
        let mut next = (*self.snapshot()).clone();
        let out = f(&mut next)?;
        if let Some(dir) = &self.dir {
            save_document(dir, &next)?;
        }
        let next = Arc::new(next);
        *self.current.write().expect("session lock poisoned") = next.clone();
        Ok((out, next))
    }
}

fn save_document(dir: &Path, session: &Session) -> Result<(), ApiError> {
    let text = export_session(session);
    // the stored log must rebuild the stored tree
    import_session(&text, session.dataset().clone())
        .map_err(|e| ApiError::internal(format!("session document does not replay: {e}")))?;
    write_atomic(&dir.join(DOCUMENT_FILE), text.as_bytes())
        .map_err(|e| ApiError::internal(format!("cannot save session: {e}")))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}

pub struct NewSession {
    pub bytes: Vec<u8>,
    pub file_name: String,
    pub options: LoadOptions,
    pub selection: Option<Vec<String>>,
    pub seed: Option<u64>,
}

pub struct Store {
    sessions: RwLock<HashMap<String, Arc<SessionSlot>>>,
    data_dir: Option<PathBuf>,
    seed: u64,
}

impl Store {
    pub fn new(data_dir: Option<PathBuf>, seed: u64) -> io::Result<Self> {
        if let Some(dir) = &data_dir {
            fs::create_dir_all(dir)?;
        }
        Ok(Self { sessions: RwLock::default(), data_dir, seed })
    }

    pub fn default_seed(&self) -> u64 {
        self.seed
    }

    pub fn create(&self, new: NewSession) -> Result<(Arc<SessionSlot>, DatasetSummary), ApiError> {
        let dataset = Arc::new(load_dataset(&new.bytes, &new.options)?);
        let selection = select_attributes(&dataset, new.selection.as_deref())?;
        let default = select_attributes(&dataset, None).map(|s| s.names().to_vec()).unwrap_or_default();
        let summary = DatasetSummary::new(&dataset, &new.file_name, &default);
        let session = Session::new(dataset, new.file_name.clone(), selection, new.seed.unwrap_or(self.seed));
        let id = uuid::Uuid::new_v4().simple().to_string();
        let dir = match &self.data_dir {
            Some(root) => {
                let dir = root.join(&id);
                let source = Source { file_name: new.file_name, options: new.options };
                let persist = || -> io::Result<()> {
                    fs::create_dir_all(&dir)?;
                    fs::write(dir.join(DATASET_FILE), &new.bytes)?;
                    fs::write(dir.join(SOURCE_FILE), serde_json::to_vec_pretty(&source).expect("serializable"))
                };
                persist().map_err(|e| ApiError::internal(format!("cannot store dataset: {e}")))?;
                save_document(&dir, &session)?;
                Some(dir)
            }
            None => None,
        };
        let slot = Arc::new(SessionSlot {
            id: id.clone(),
            write: Mutex::new(()),
            current: RwLock::new(Arc::new(session)),
            dir,
        });
        self.sessions.write().expect("store lock poisoned").insert(id, slot.clone());
        Ok((slot, summary))
    }

    pub fn get(&self, id: &str) -> Result<Arc<SessionSlot>, ApiError> {
        self.sessions
            .read()
            .expect("store lock poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("store lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reloads every stored session. Returns the ids recovered and, for each
    /// directory that could not be restored, the reason.
    pub fn recover(&self) -> (Vec<String>, Vec<(PathBuf, String)>) {
        let Some(root) = &self.data_dir else { return Default::default() };
        let mut ok = Vec::new();
        let mut failed = Vec::new();
        let Ok(entries) = fs::read_dir(root) else { return Default::default() };
        let mut dirs: Vec<PathBuf> = entries.flatten().map(|e| e.path()).filter(|p| p.is_dir()).collect();
        dirs.sort();
        for dir in dirs {
            match restore(&dir) {
                Ok(session) => {
                    let id = dir.file_name().expect("directory name").to_string_lossy().into_owned();
                    let slot = SessionSlot {
                        id: id.clone(),
                        write: Mutex::new(()),
                        current: RwLock::new(Arc::new(session)),
                        dir: Some(dir),
                    };
                    self.sessions.write().expect("store lock poisoned").insert(id.clone(), Arc::new(slot));
                    ok.push(id);
                }
                Err(e) => failed.push((dir, e)),
            }
        }
        (ok, failed)
    }
}

fn restore(dir: &Path) -> Result<Session, String> {
    let read = |name: &str| fs::read(dir.join(name)).map_err(|e| format!("{name}: {e}"));
    let source: Source = serde_json::from_slice(&read(SOURCE_FILE)?).map_err(|e| format!("{SOURCE_FILE}: {e}"))?;
    let dataset = load_dataset(&read(DATASET_FILE)?, &source.options).map_err(|e| e.to_string())?;
    let text = String::from_utf8(read(DOCUMENT_FILE)?).map_err(|e| e.to_string())?;
    import_session(&text, Arc::new(dataset)).map_err(|e| e.to_string())
}
