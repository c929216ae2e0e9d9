use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use tracing::{debug, warn};

use super::{Decoding, Gateway, GatewayError, ModelRequest};
use crate::jsonl::write_atomic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub multiplier: f64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            initial_backoff_ms: 500,
            multiplier: 2.0,
            max_backoff_ms: 16_000,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let ms = self.initial_backoff_ms as f64 * self.multiplier.powi(retry as i32);
        Duration::from_millis(ms.min(self.max_backoff_ms as f64) as u64)
    }
}

fn default_max_tokens() -> u32 {
    2048
}

fn default_concurrency() -> usize {
    4
}

fn default_timeout() -> u64 {
    120
}

fn default_api_key_env() -> Option<String> {
    Some("ADAPR_API_KEY".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Base of an OpenAI-style API; requests go to `<base_url>/chat/completions`.
    pub base_url: String,
    pub model: String,
    #[serde(default)]
    pub decoding: Decoding,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default)]
    pub retry: RetryPolicy,
    /// Environment variable holding the bearer token; `None` sends no auth.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: Option<String>,
    /// Response cache directory; `None` disables caching.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// Maximum requests in flight.
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

/// Content-addressed reply store, one file per request key.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2]).join(format!("{key}.txt"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        std::fs::read_to_string(self.path(key)).ok()
    }

    pub fn put(&self, key: &str, reply: &str) -> std::io::Result<()> {
        write_atomic(&self.path(key), reply.as_bytes())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

/// Counting semaphore bounding in-flight requests.
struct Permits {
    free: Mutex<usize>,
    cond: Condvar,
}

impl Permits {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cond: Condvar::new(),
        }
    }

    fn acquire(&self) -> PermitGuard<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cond.wait(free).unwrap();
        }
        *free -= 1;
        PermitGuard(self)
    }
}

struct PermitGuard<'a>(&'a Permits);

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cond.notify_one();
    }
}

pub struct RemoteGateway {
    config: RemoteConfig,
    client: reqwest::blocking::Client,
    cache: Option<ResponseCache>,
    permits: Permits,
    retries: AtomicU64,
}

impl RemoteGateway {
    pub fn new(config: RemoteConfig) -> Result<Self, GatewayError> {
        if config.max_tokens == 0 {
            return Err(GatewayError::Decode("max_tokens must be at least 1".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GatewayError::Network(e.to_string()))?;
        Ok(Self {
            cache: config.cache_dir.clone().map(ResponseCache::new),
            permits: Permits::new(config.concurrency),
            retries: AtomicU64::new(0),
            client,
            config,
        })
    }

    /// Retries performed since construction.
    pub fn retries(&self) -> u64 {
        self.retries.load(Ordering::Relaxed)
    }

    pub fn request_body(&self, request: &ModelRequest) -> serde_json::Value {
        let (temperature, top_p) = self.config.decoding.params();
        json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": temperature,
            "top_p": top_p,
            "max_tokens": self.config.max_tokens,
        })
    }

    /// Cache key: the exact request body plus the sample index.
    pub fn cache_key(&self, request: &ModelRequest) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.request_body(request).to_string().as_bytes());
        if let Some(sample) = request.sample {
            hasher.update(sample.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }

    fn api_key(&self) -> Result<Option<String>, GatewayError> {
        match &self.config.api_key_env {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .map(Some)
                .map_err(|_| GatewayError::Auth(format!("environment variable {var} is not set"))),
        }
    }

    fn send_once(&self, body: &serde_json::Value, key: Option<&str>) -> Result<String, GatewayError> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let mut builder = self.client.post(url).json(body);
        if let Some(key) = key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| GatewayError::Network(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response.text().map_err(|e| GatewayError::Network(e.to_string()))?;
        match status {
            200..=299 => {}
            401 | 403 => return Err(GatewayError::Auth(format!("HTTP {status}"))),
            429 | 503 => return Err(GatewayError::Overlimit(format!("HTTP {status}"))),
            _ => return Err(GatewayError::Http { status, body: text }),
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| GatewayError::Decode(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| GatewayError::Decode("missing choices[0].message.content".into()))
    }
}

impl Gateway for RemoteGateway {
    fn complete(&self, request: &ModelRequest) -> Result<String, GatewayError> {
        let cache_key = self.cache_key(request);
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&cache_key)) {
            debug!(key = %cache_key, "cache hit");
            return Ok(hit);
        }
        let api_key = self.api_key()?;
        let body = self.request_body(request);
        let attempts = self.config.retry.max_attempts.max(1);
        let mut attempt = 0;
        let reply = loop {
            let result = {
                let _permit = self.permits.acquire();
                self.send_once(&body, api_key.as_deref())
            };
            match result {
                Ok(reply) => break reply,
                Err(err) if err.is_retryable() && attempt + 1 < attempts => {
                    let delay = self.config.retry.backoff(attempt);
                    warn!(attempt = attempt + 1, ?delay, "retrying after {err}");
                    self.retries.fetch_add(1, Ordering::Relaxed);
                    std::thread::sleep(delay);
                    attempt += 1;
                }
                Err(err) => return Err(err),
            }
        };
        if let Some(cache) = &self.cache {
            cache
                .put(&cache_key, &reply)
                .map_err(|e| GatewayError::Cache(e.to_string()))?;
        }
        Ok(reply)
    }
}
