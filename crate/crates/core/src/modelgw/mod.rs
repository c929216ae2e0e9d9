//! Repair-model gateway. A remote chat-completion client and a deterministic
//! mock sit behind the same [`Gateway`] trait; the locate and repair calls
//! of the two-stage pipeline are built on top.

mod calls;
mod log;
mod mock;
mod remote;

pub use calls::{baseline, locate, repair, repair_samples, LocateError, Located, RepairError, Repaired};
pub use log::{LogEntry, SessionLog};
pub use mock::{MockBehavior, MockDefault, MockGateway, PERTURBATION_LINES};
pub use remote::{RemoteConfig, RemoteGateway, ResponseCache, RetryPolicy};

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::promptkit::TemplateId;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GatewayError {
    #[error("network error: {0}")]
    Network(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("endpoint over capacity: {0}")]
    Overlimit(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: {0}")]
    Decode(String),
    #[error("no scripted reply for request {0}")]
    Unscripted(String),
    #[error("mock oracle needs {0} in the request context")]
    MissingContext(&'static str),
    #[error("response cache: {0}")]
    Cache(String),
}

impl GatewayError {
    /// Short label recorded in pipeline rows.
    pub fn category(&self) -> &'static str {
        match self {
            GatewayError::Network(_) => "network",
            GatewayError::Auth(_) => "auth",
            GatewayError::Overlimit(_) => "overlimit",
            GatewayError::Http { .. } => "http",
            GatewayError::Decode(_) => "decode",
            GatewayError::Unscripted(_) => "unscripted",
            GatewayError::MissingContext(_) => "missing_context",
            GatewayError::Cache(_) => "cache",
        }
    }

    pub fn is_retryable(&self) -> bool {
        match self {
            GatewayError::Network(_) | GatewayError::Overlimit(_) => true,
            GatewayError::Http { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Decoding {
    Greedy,
    Sampled { top_p: f64, temperature: f64 },
}

impl Default for Decoding {
    fn default() -> Self {
        Decoding::Greedy
    }
}

impl Decoding {
    /// Baseline sampling settings.
    pub const BASELINE: Decoding = Decoding::Sampled {
        top_p: 0.7,
        temperature: 1.0,
    };

    /// (temperature, top_p) as sent on the wire.
    pub fn params(self) -> (f64, f64) {
        match self {
            Decoding::Greedy => (0.0, 1.0),
            Decoding::Sampled { top_p, temperature } => (temperature, top_p),
        }
    }
}

/// Instance data a request is about. Remote endpoints only see the prompt;
/// the mock oracles read the gold fields.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestContext {
    pub instance_id: String,
    pub problem_statement: String,
    pub buggy_code: String,
    /// Rendered Code Diff given to the modifier, if any.
    pub annotation: Option<String>,
    pub gold_fixed: Option<String>,
    pub gold_diff: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelRequest {
    pub template: TemplateId,
    pub prompt: String,
    pub context: RequestContext,
    /// Index of this draw when several samples are taken for one prompt.
    pub sample: Option<u32>,
}

impl ModelRequest {
    /// sha256 over (template, q, c, annotation) and the sample index.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        let annotation = self.context.annotation.as_deref().unwrap_or("");
        for part in [
            self.template.as_str(),
            &self.context.problem_statement,
            &self.context.buggy_code,
            annotation,
        ] {
            hasher.update((part.len() as u64).to_le_bytes());
            hasher.update(part.as_bytes());
        }
        if let Some(sample) = self.sample {
            hasher.update(b"sample");
            hasher.update(sample.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}

pub trait Gateway: Send + Sync {
    fn complete(&self, request: &ModelRequest) -> Result<String, GatewayError>;
}

impl<G: Gateway + ?Sized> Gateway for Arc<G> {
    fn complete(&self, request: &ModelRequest) -> Result<String, GatewayError> {
        (**self).complete(request)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EndpointConfig {
    Remote(RemoteConfig),
    Mock {
        #[serde(default)]
        behavior: MockDefault,
        /// Fingerprint to reply overrides.
        #[serde(default)]
        script: std::collections::BTreeMap<String, String>,
        /// Replay a recorded session instead of the default behaviour.
        #[serde(default)]
        replay: Option<PathBuf>,
    },
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig::Mock {
            behavior: MockDefault::Echo,
            script: Default::default(),
            replay: None,
        }
    }
}

impl EndpointConfig {
    pub fn build(&self) -> Result<Arc<dyn Gateway>, GatewayError> {
        match self {
            EndpointConfig::Remote(cfg) => Ok(Arc::new(RemoteGateway::new(cfg.clone())?)),
            EndpointConfig::Mock {
                behavior,
                script,
                replay,
            } => {
                let mut mock = match replay {
                    Some(path) => MockBehavior::from_session_log(path)
                        .map_err(|e| GatewayError::Cache(format!("{}: {e}", path.display())))?,
                    None => MockBehavior::new(behavior.clone()),
                };
                mock.script.extend(script.clone());
                Ok(Arc::new(MockGateway::new(mock)))
            }
        }
    }
}
