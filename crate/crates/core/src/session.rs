//! Per-analysis state for the Display-Select-Filter-Track loop.
//!
//! Every mutation is recorded as an [`Action`] in an append-only event log,
//! and [`SessionState::replay`] rebuilds an identical state from that log.
//! Classifications are never stored: they are derived from `alpha` on read,
//! so changing the significance level leaves selections and the tracked set
//! untouched.

use std::collections::BTreeSet;
use std::time::{SystemTime, UNIX_EPOCH};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::{apply_filter, FilterError};
use crate::ingest::{Dataset, DatasetId};
use crate::ma::{classify, Classification, SignificanceLevel};
use crate::selection::{
    combine, select_box, select_lasso, select_search, Origin, Selection, SelectionError,
    SelectionId, SelectionSet,
};

pub const MAX_NOTES_BYTES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("significance level must lie in (0, 1], got {value}")]
    AlphaOutOfRange { value: f64 },
    #[error("unknown selection {id}")]
    UnknownSelection { id: SelectionId },
    #[error("notes are {bytes} bytes, limit is {limit}")]
    NotesTooLarge { bytes: usize, limit: usize },
    #[error("unknown dataset {id}")]
    UnknownDataset { id: DatasetId },
    #[error("session works on dataset {expected}, got {found}")]
    DatasetMismatch { expected: DatasetId, found: DatasetId },
    #[error("event {index}: {reason}")]
    InvalidEventLog { index: usize, reason: String },
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Filter(#[from] FilterError),
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::AlphaOutOfRange { .. } => "AlphaOutOfRange",
            SessionError::UnknownSelection { .. } => "UnknownSelection",
            SessionError::NotesTooLarge { .. } => "NotesTooLarge",
            SessionError::UnknownDataset { .. } => "UnknownDataset",
            SessionError::DatasetMismatch { .. } => "MixedDatasets",
            SessionError::InvalidEventLog { .. } => "InvalidEventLog",
            SessionError::Selection(e) => e.code(),
            SessionError::Filter(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub String);

impl SessionId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for SessionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    Create {
        dataset_id: DatasetId,
        alpha: SignificanceLevel,
    },
    SetAlpha {
        alpha: SignificanceLevel,
    },
    AddSelection {
        id: SelectionId,
        label: String,
        origin: Origin,
    },
    Track {
        selection: SelectionId,
    },
    ExpandTracked {
        selection: SelectionId,
    },
    SetNotes {
        text: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Milliseconds since the Unix epoch.
    pub at_ms: u64,
    pub action: Action,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    id: SessionId,
    dataset_id: DatasetId,
    alpha: SignificanceLevel,
    selections: IndexMap<SelectionId, SelectionSet>,
    tracked: BTreeSet<String>,
    notes: String,
    event_log: Vec<Event>,
    next_selection: u64,
}

impl SessionState {
    pub fn new(id: SessionId, dataset: &Dataset, alpha: f64) -> Result<SessionState, SessionError> {
        let alpha = SignificanceLevel::new(alpha).map_err(|_| SessionError::AlphaOutOfRange { value: alpha })?;
        let mut s = SessionState {
            id,
            dataset_id: dataset.id().clone(),
            alpha,
            selections: IndexMap::new(),
            tracked: BTreeSet::new(),
            notes: String::new(),
            event_log: Vec::new(),
            next_selection: 1,
        };
        s.event_log.push(Event {
            at_ms: now_ms(),
            action: Action::Create {
                dataset_id: dataset.id().clone(),
                alpha,
            },
        });
        Ok(s)
    }

    /// Rebuilds a session by re-running `events` against `dataset`. The log
    /// must start with a `Create` event for that dataset.
    pub fn replay(id: SessionId, dataset: &Dataset, events: &[Event]) -> Result<SessionState, SessionError> {
        let Some((first, rest)) = events.split_first() else {
            return Err(SessionError::InvalidEventLog {
                index: 0,
                reason: "empty event log".into(),
            });
        };
        let Action::Create { dataset_id, alpha } = &first.action else {
            return Err(SessionError::InvalidEventLog {
                index: 0,
                reason: "log must start with create".into(),
            });
        };
        if dataset_id != dataset.id() {
            return Err(SessionError::DatasetMismatch {
                expected: dataset_id.clone(),
                found: dataset.id().clone(),
            });
        }
        let mut s = SessionState::new(id, dataset, alpha.value())?;
        s.event_log[0].at_ms = first.at_ms;
        for (i, ev) in rest.iter().enumerate() {
            if matches!(ev.action, Action::Create { .. }) {
                return Err(SessionError::InvalidEventLog {
                    index: i + 1,
                    reason: "create may only appear first".into(),
                });
            }
            s.apply(dataset, ev.action.clone(), ev.at_ms).map_err(|e| match e {
                e @ SessionError::InvalidEventLog { .. } => e,
                other => SessionError::InvalidEventLog {
                    index: i + 1,
                    reason: other.to_string(),
                },
            })?;
        }
        Ok(s)
    }

    pub fn id(&self) -> &SessionId {
        &self.id
    }

    pub fn dataset_id(&self) -> &DatasetId {
        &self.dataset_id
    }

    pub fn alpha(&self) -> SignificanceLevel {
        self.alpha
    }

    pub fn selections(&self) -> impl Iterator<Item = &SelectionSet> {
        self.selections.values()
    }

    pub fn selection(&self, id: &SelectionId) -> Result<&SelectionSet, SessionError> {
        self.selections
            .get(id)
            .ok_or_else(|| SessionError::UnknownSelection { id: id.clone() })
    }

    pub fn tracked(&self) -> &BTreeSet<String> {
        &self.tracked
    }

    pub fn notes(&self) -> &str {
        &self.notes
    }

    pub fn events(&self) -> &[Event] {
        &self.event_log
    }

    pub fn next_selection_id(&self) -> SelectionId {
        SelectionId(format!("sel-{}", self.next_selection))
    }

    /// Classification of one gene at the session's current level.
    pub fn classification(&self, d: &Dataset, name: &str) -> Option<Classification> {
        d.get(name).map(|r| classify(r.point(), r.p, self.alpha))
    }

    pub fn set_alpha(&mut self, alpha: f64) -> Result<(), SessionError> {
        let alpha = SignificanceLevel::new(alpha).map_err(|_| SessionError::AlphaOutOfRange { value: alpha })?;
        self.record(Action::SetAlpha { alpha });
        self.alpha = alpha;
        Ok(())
    }

    /// Evaluates `origin`, stores the result under a fresh id and returns it.
    pub fn add_selection(
        &mut self,
        d: &Dataset,
        origin: Origin,
        label: Option<String>,
    ) -> Result<&SelectionSet, SessionError> {
        let id = self.next_selection_id();
        let label = label.unwrap_or_else(|| format!("{} {}", origin.kind(), self.next_selection));
        self.apply(d, Action::AddSelection { id: id.clone(), label, origin }, now_ms())?;
        Ok(&self.selections[&id])
    }

    /// Replaces the tracked set with the members of `selection`.
    pub fn track(&mut self, selection: &SelectionId) -> Result<(), SessionError> {
        self.tracked = self.selection(selection)?.members.clone();
        self.record(Action::Track {
            selection: selection.clone(),
        });
        Ok(())
    }

    /// Adds the members of `selection` to the tracked set.
    pub fn expand_tracked(&mut self, selection: &SelectionId) -> Result<(), SessionError> {
        let members = self.selection(selection)?.members.clone();
        self.tracked.extend(members);
        self.record(Action::ExpandTracked {
            selection: selection.clone(),
        });
        Ok(())
    }

    pub fn set_notes(&mut self, text: String) -> Result<(), SessionError> {
        if text.len() > MAX_NOTES_BYTES {
            return Err(SessionError::NotesTooLarge {
                bytes: text.len(),
                limit: MAX_NOTES_BYTES,
            });
        }
        self.notes = text.clone();
        self.record(Action::SetNotes { text });
        Ok(())
    }

    fn record(&mut self, action: Action) {
        self.event_log.push(Event { at_ms: now_ms(), action });
    }

    fn evaluate(&self, d: &Dataset, origin: Origin) -> Result<Selection, SessionError> {
        Ok(match origin {
            Origin::Lasso { polygon } => select_lasso(d, &polygon),
            Origin::Box { region } => select_box(d, &region),
            Origin::Search { query, pick } => select_search(d, &query, pick.as_deref())?,
            Origin::Combine { op, inputs } => {
                let sets = inputs
                    .iter()
                    .map(|id| self.selection(id))
                    .collect::<Result<Vec<_>, _>>()?;
                combine(&sets, op)?
            }
            Origin::Filter { spec, source } => {
                let source = source.as_ref().map(|id| self.selection(id)).transpose()?;
                apply_filter(d, source, &spec)?
            }
            Origin::Tracked => Selection {
                dataset_id: d.id().clone(),
                members: self.tracked.clone(),
                origin: Origin::Tracked,
            },
        })
    }

    fn apply(&mut self, d: &Dataset, action: Action, at_ms: u64) -> Result<(), SessionError> {
        if d.id() != &self.dataset_id {
            return Err(SessionError::DatasetMismatch {
                expected: self.dataset_id.clone(),
                found: d.id().clone(),
            });
        }
        match &action {
            Action::Create { .. } => {
                return Err(SessionError::InvalidEventLog {
                    index: self.event_log.len(),
                    reason: "session already created".into(),
                })
            }
            Action::SetAlpha { alpha } => self.alpha = *alpha,
            Action::AddSelection { id, label, origin } => {
                if *id != self.next_selection_id() {
                    return Err(SessionError::InvalidEventLog {
                        index: self.event_log.len(),
                        reason: format!("expected selection id {}, found {id}", self.next_selection_id()),
                    });
                }
                let set = self.evaluate(d, origin.clone())?.into_set(id.clone(), label.clone());
                self.selections.insert(id.clone(), set);
                self.next_selection += 1;
            }
            Action::Track { selection } => {
                self.tracked = self.selection(selection)?.members.clone();
            }
            Action::ExpandTracked { selection } => {
                let members = self.selection(selection)?.members.clone();
                self.tracked.extend(members);
            }
            Action::SetNotes { text } => {
                if text.len() > MAX_NOTES_BYTES {
                    return Err(SessionError::NotesTooLarge {
                        bytes: text.len(),
                        limit: MAX_NOTES_BYTES,
                    });
                }
                self.notes = text.clone();
            }
        }
        self.event_log.push(Event { at_ms, action });
        Ok(())
    }

    /// Checks the invariants a deserialized state must satisfy before use.
    pub(crate) fn validate_against(&self, d: &Dataset) -> Result<(), (String, String)> {
        if &self.dataset_id != d.id() {
            return Err(("session.dataset_id".into(), "does not match bundled dataset".into()));
        }
        for (i, name) in self.tracked.iter().enumerate() {
            if !d.contains(name) {
                return Err((format!("session.tracked[{i}]"), format!("unknown gene {name:?}")));
            }
        }
        for (key, set) in &self.selections {
            let path = format!("session.selections.{key}");
            if &set.id != key {
                return Err((format!("{path}.id"), "does not match its key".into()));
            }
            if &set.dataset_id != d.id() {
                return Err((format!("{path}.dataset_id"), "does not match bundled dataset".into()));
            }
            if let Some(name) = set.members.iter().find(|n| !d.contains(n)) {
                return Err((format!("{path}.members"), format!("unknown gene {name:?}")));
            }
            if let Origin::Filter { spec, .. } = &set.origin {
                spec.validate()
                    .map_err(|e| (format!("{path}.origin.spec"), e.to_string()))?;
            }
        }
        if self.notes.len() > MAX_NOTES_BYTES {
            return Err(("session.notes".into(), "exceeds size limit".into()));
        }
        if !matches!(self.event_log.first().map(|e| &e.action), Some(Action::Create { .. })) {
            return Err(("session.event_log[0]".into(), "log must start with create".into()));
        }
        Ok(())
    }
}
