//! In-memory registries for datasets and sessions.
//!
//! Datasets are immutable and shared behind `Arc`. Each session sits behind
//! its own `RwLock`, so mutations of one session are serialized while other
//! sessions proceed independently.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use parking_lot::RwLock;
use tracing::{info, warn};

use maplot_core::export::{export_session, import_session, SessionBundle};
use maplot_core::ingest::{Dataset, DatasetId};
use maplot_core::session::{SessionId, SessionState};

use crate::config::Config;
use crate::error::ApiError;

pub type SharedSession = Arc<RwLock<SessionState>>;

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    config: Config,
    datasets: RwLock<HashMap<DatasetId, Arc<Dataset>>>,
    sessions: RwLock<HashMap<SessionId, SharedSession>>,
}

impl AppState {
    pub fn new(config: Config) -> Self {
        let state = AppState {
            inner: Arc::new(Inner {
                config,
                datasets: RwLock::new(HashMap::new()),
                sessions: RwLock::new(HashMap::new()),
            }),
        };
        if let Some(dir) = state.config().persist_dir.clone() {
            state.restore(&dir);
        }
        state
    }

    pub fn config(&self) -> &Config {
        &self.inner.config
    }

    /// Registers `d`, or returns the already registered dataset with the
    /// same content id.
    pub fn insert_dataset(&self, d: Dataset) -> Arc<Dataset> {
        let mut datasets = self.inner.datasets.write();
        datasets
            .entry(d.id().clone())
            .or_insert_with(|| Arc::new(d))
            .clone()
    }

    pub fn dataset(&self, id: &DatasetId) -> Result<Arc<Dataset>, ApiError> {
        self.inner
            .datasets
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("UnknownDataset", format!("unknown dataset {id}")))
    }

    pub fn insert_session(&self, s: SessionState) -> SharedSession {
        let id = s.id().clone();
        let shared = Arc::new(RwLock::new(s));
        self.inner.sessions.write().insert(id, shared.clone());
        shared
    }

    pub fn session(&self, id: &SessionId) -> Result<SharedSession, ApiError> {
        self.inner
            .sessions
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("UnknownSession", format!("unknown session {id}")))
    }

    /// Session plus the dataset it works on.
    pub fn session_with_dataset(&self, id: &SessionId) -> Result<(SharedSession, Arc<Dataset>), ApiError> {
        let session = self.session(id)?;
        let dataset_id = session.read().dataset_id().clone();
        Ok((session, self.dataset(&dataset_id)?))
    }

    /// Writes the session bundle to the persistence directory, if one is
    /// configured. Failures are logged; the in-memory state stays
    /// authoritative.
    pub fn persist(&self, s: &SessionState, d: &Dataset) {
        let Some(dir) = &self.config().persist_dir else {
            return;
        };
        let path = dir.join(format!("{}.json", s.id()));
        let tmp = dir.join(format!(".{}.json.tmp", s.id()));
        let result = fs::create_dir_all(dir)
            .and_then(|_| fs::write(&tmp, export_session(s, d)))
            .and_then(|_| fs::rename(&tmp, &path));
        if let Err(e) = result {
            warn!(session = %s.id(), error = %e, "failed to persist session");
        }
    }

    pub fn import(&self, bundle: SessionBundle) -> (SharedSession, Arc<Dataset>) {
        let dataset = self.insert_dataset(bundle.dataset);
        (self.insert_session(bundle.session), dataset)
    }

    fn restore(&self, dir: &Path) {
        let Ok(entries) = fs::read_dir(dir) else {
            return;
        };
        for entry in entries.flatten() {
            let path = entry.path();
            if path.extension().is_none_or(|e| e != "json") {
                continue;
            }
            match fs::read(&path).map_err(|e| e.to_string()).and_then(|b| {
                import_session(&b).map_err(|e| e.to_string())
            }) {
                Ok(bundle) => {
                    info!(session = %bundle.session.id(), "restored session");
                    self.import(bundle);
                }
                Err(e) => warn!(path = %path.display(), error = %e, "skipping unreadable bundle"),
            }
        }
    }
}
