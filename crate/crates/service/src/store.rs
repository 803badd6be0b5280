use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use noisy_search::harness::DatasetSpec;

use crate::error::ApiError;
use crate::session::{AnswerRequest, CreateRequest, Session, SessionSummary};

/// Idle time after which a session is dropped.
pub const DEFAULT_TTL: Duration = Duration::from_secs(3600);
/// Upper bound on live sessions.
pub const MAX_SESSIONS: usize = 10_000;

type Shared = Arc<Mutex<Session>>;

/// In-memory session table. Each session has its own lock so slow updates on
/// large datasets do not block other sessions.
pub struct Store {
    sessions: Mutex<HashMap<String, Shared>>,
    default_dataset: Option<DatasetSpec>,
    ttl: Duration,
}

impl Store {
    pub fn new(default_dataset: Option<DatasetSpec>, ttl: Duration) -> Self {
        Store {
            sessions: Mutex::new(HashMap::new()),
            default_dataset,
            ttl,
        }
    }

    fn table(&self) -> std::sync::MutexGuard<'_, HashMap<String, Shared>> {
        self.sessions.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn get(&self, id: &str) -> Result<Shared, ApiError> {
        self.table()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.table().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn create(&self, req: CreateRequest) -> Result<SessionSummary, ApiError> {
        self.evict_expired(Instant::now());
        if self.len() >= MAX_SESSIONS {
            return Err(ApiError::Conflict("too many live sessions".into()));
        }
        let id = uuid::Uuid::new_v4().to_string();
        let session = Session::create(id.clone(), req, self.default_dataset.as_ref())?;
        let summary = session.summary(true);
        self.table().insert(id, Arc::new(Mutex::new(session)));
        Ok(summary)
    }

    pub fn summary(&self, id: &str) -> Result<SessionSummary, ApiError> {
        let shared = self.get(id)?;
        let mut s = shared.lock().unwrap_or_else(|e| e.into_inner());
        s.last_used = Instant::now();
        Ok(s.summary(true))
    }

    pub fn answer(&self, id: &str, req: &AnswerRequest) -> Result<SessionSummary, ApiError> {
        let shared = self.get(id)?;
        let mut s = shared.lock().unwrap_or_else(|e| e.into_inner());
        s.last_used = Instant::now();
        s.answer(req)?;
        Ok(s.summary(false))
    }

    pub fn delete(&self, id: &str) -> Result<(), ApiError> {
        self.table()
            .remove(id)
            .map(|_| ())
            .ok_or_else(|| ApiError::NotFound(id.to_string()))
    }

    /// Drops sessions idle for longer than the TTL; returns how many.
    pub fn evict_expired(&self, now: Instant) -> usize {
        let mut table = self.table();
        let before = table.len();
        table.retain(|_, s| match s.try_lock() {
            Ok(s) => now.saturating_duration_since(s.last_used) <= self.ttl,
            // In use right now.
            Err(_) => true,
        });
        before - table.len()
    }
}
