use std::io;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{Gateway, GatewayError, ModelRequest};
use crate::jsonl::write_jsonl;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub fingerprint: String,
    pub prompt: String,
    pub reply: String,
    pub latency_ms: u64,
}

/// Records every successful exchange of the wrapped gateway.
pub struct SessionLog {
    inner: Arc<dyn Gateway>,
    entries: Mutex<Vec<LogEntry>>,
}

impl SessionLog {
    pub fn new(inner: Arc<dyn Gateway>) -> Self {
        Self {
            inner,
            entries: Mutex::new(Vec::new()),
        }
    }

    /// Entries sorted by fingerprint, one per fingerprint.
    pub fn entries(&self) -> Vec<LogEntry> {
        let mut entries = self.entries.lock().unwrap().clone();
        entries.sort_by(|a, b| a.fingerprint.cmp(&b.fingerprint));
        entries.dedup_by(|a, b| a.fingerprint == b.fingerprint);
        entries
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        write_jsonl(path, &self.entries())
    }
}

impl Gateway for SessionLog {
    fn complete(&self, request: &ModelRequest) -> Result<String, GatewayError> {
        let started = Instant::now();
        let reply = self.inner.complete(request)?;
        self.entries.lock().unwrap().push(LogEntry {
            fingerprint: request.fingerprint(),
            prompt: request.prompt.clone(),
            reply: reply.clone(),
            latency_ms: started.elapsed().as_millis() as u64,
        });
        Ok(reply)
    }
}
