//! Session registry with optional on-disk persistence.
//!
//! Each session lives in `<dir>/<id>.jsonl`, one event per line, and
//! `<dir>/index.jsonl` lists the session ids in creation order. Writers on
//! one session are serialized; readers see the last committed session.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;
use wedesign::TrialConfig;

use crate::error::{ServiceError, ServiceResult};
use crate::session::{Event, Session, SessionView};

#[derive(Debug, Serialize, Deserialize)]
struct IndexLine {
    id: String,
    ts: u64,
}

struct Entry {
    writer: Mutex<()>,
    committed: RwLock<Session>,
}

pub struct Store {
    dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, Arc<Entry>>>,
}

pub fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn append_lines<T: Serialize>(path: &Path, items: &[T]) -> ServiceResult<()> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).map_err(|e| ServiceError::Storage(e.to_string()))?;
        buf.push(b'\n');
    }
    file.write_all(&buf)?;
    file.sync_data()?;
    Ok(())
}

fn read_lines<T: serde::de::DeserializeOwned>(path: &Path) -> ServiceResult<Vec<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| ServiceError::Replay(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(item);
    }
    Ok(out)
}

impl Store {
    /// A store that keeps sessions in memory only.
    pub fn in_memory() -> Store {
        Store { dir: None, sessions: RwLock::new(HashMap::new()) }
    }

    /// Opens (creating if needed) a persistent store and replays every
    /// session listed in its index.
    pub fn open(dir: impl Into<PathBuf>) -> ServiceResult<Store> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let index = dir.join("index.jsonl");
        let mut sessions = HashMap::new();
        if index.exists() {
            for line in read_lines::<IndexLine>(&index)? {
                let events: Vec<Event> = read_lines(&dir.join(format!("{}.jsonl", line.id)))?;
                let session = Session::replay(&events)?;
                sessions.insert(line.id, Arc::new(Entry { writer: Mutex::new(()), committed: RwLock::new(session) }));
            }
        }
        Ok(Store { dir: Some(dir), sessions: RwLock::new(sessions) })
    }

    fn entry(&self, id: &str) -> ServiceResult<Arc<Entry>> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    fn session_path(&self, id: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{id}.jsonl")))
    }

    pub fn create(&self, config: TrialConfig) -> ServiceResult<SessionView> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let ts = now_millis();
        let session = Session::create(id.clone(), config, ts)?;
        let view = session.view()?;
        if let (Some(dir), Some(path)) = (&self.dir, self.session_path(&id)) {
            append_lines(&path, session.events())?;
            append_lines(&dir.join("index.jsonl"), &[IndexLine { id: id.clone(), ts }])?;
        }
        let entry = Arc::new(Entry { writer: Mutex::new(()), committed: RwLock::new(session) });
        self.sessions.write().expect("session map lock").insert(id, entry);
        Ok(view)
    }

    /// Runs a read-only computation against the last committed session.
    pub fn read<R>(&self, id: &str, f: impl FnOnce(&Session) -> ServiceResult<R>) -> ServiceResult<R> {
        let entry = self.entry(id)?;
        let session = entry.committed.read().expect("session lock");
        f(&session)
    }

    pub fn view(&self, id: &str) -> ServiceResult<SessionView> {
        self.read(id, Session::view)
    }

    /// Applies `f` to a copy of the session, persists the new events, then
    /// publishes the copy. A failure at any step leaves the session as it
    /// was.
    pub async fn mutate<R>(&self, id: &str, f: impl FnOnce(&mut Session) -> ServiceResult<R>) -> ServiceResult<R> {
        let entry = self.entry(id)?;
        let _writer = entry.writer.lock().await;
        let mut draft = entry.committed.read().expect("session lock").clone();
        let before = draft.events().len();
        let out = f(&mut draft)?;
        let fresh = &draft.events()[before..];
        if !fresh.is_empty() {
            if let Some(path) = self.session_path(id) {
                append_lines(&path, fresh)?;
            }
        }
        *entry.committed.write().expect("session lock") = draft;
        Ok(out)
    }
}
