//! Session registry with one append-only JSON-lines log per session.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use crate::error::{Result, ServiceError};
use crate::events::{read_events, write_event, SessionSpec};
use crate::session::Session;

#[derive(Debug)]
struct Entry {
    session: Session,
    /// Events already written to disk.
    persisted: usize,
}

/// Writes to a session go through its own mutex, so submissions to one
/// session are serialized while different sessions proceed in parallel.
#[derive(Debug, Default)]
pub struct Store {
    dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Entry>>>>,
}

impl Store {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Keeps logs under `dir`, replaying any `*.jsonl` logs already there.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut sessions = HashMap::new();
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "jsonl") {
                let events = read_events(BufReader::new(File::open(&path)?))
                    .map_err(|e| ServiceError::Internal(format!("{}: {e}", path.display())))?;
                if events.is_empty() {
                    continue;
                }
                let session = Session::replay(&events)
                    .map_err(|e| ServiceError::Internal(format!("{}: {e}", path.display())))?;
                let persisted = session.events().len();
                sessions.insert(session.id().to_string(), Arc::new(Mutex::new(Entry { session, persisted })));
            }
        }
        tracing::info!(count = sessions.len(), dir = %dir.display(), "loaded sessions");
        Ok(Self { dir: Some(dir), sessions: RwLock::new(sessions) })
    }

    pub fn log_path(&self, id: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{id}.jsonl")))
    }

    pub fn create(&self, spec: SessionSpec) -> Result<Session> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = Session::create(id.clone(), spec)?;
        let mut entry = Entry { session, persisted: 0 };
        self.flush(&mut entry)?;
        let snapshot = entry.session.clone();
        self.sessions.write().expect("session map poisoned").insert(id, Arc::new(Mutex::new(entry)));
        Ok(snapshot)
    }

    fn entry(&self, id: &str) -> Result<Arc<Mutex<Entry>>> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("session {id}")))
    }

    pub fn read<R>(&self, id: &str, f: impl FnOnce(&Session) -> Result<R>) -> Result<R> {
        let entry = self.entry(id)?;
        let guard = entry.lock().expect("session poisoned");
        f(&guard.session)
    }

    /// Runs `f` with exclusive access and persists whatever events it
    /// appended, including those appended before an error.
    pub fn update<R>(&self, id: &str, f: impl FnOnce(&mut Session) -> Result<R>) -> Result<R> {
        let entry = self.entry(id)?;
        let mut guard = entry.lock().expect("session poisoned");
        let out = f(&mut guard.session);
        self.flush(&mut guard)?;
        out
    }

    fn flush(&self, entry: &mut Entry) -> Result<()> {
        let events = &entry.session.events()[entry.persisted..];
        if events.is_empty() {
            return Ok(());
        }
        if let Some(path) = self.log_path(entry.session.id()) {
            append(&path, events)?;
        }
        entry.persisted = entry.session.events().len();
        Ok(())
    }
}

fn append(path: &Path, events: &[crate::events::Event]) -> std::io::Result<()> {
    let mut w = BufWriter::new(OpenOptions::new().create(true).append(true).open(path)?);
    for ev in events {
        write_event(&mut w, ev)?;
    }
    w.flush()
}
