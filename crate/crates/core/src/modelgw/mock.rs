use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::log::LogEntry;
use super::{Gateway, GatewayError, ModelRequest};
use crate::jsonl::read_jsonl;
use crate::promptkit::TemplateId;

/// Two top-level statements with no effect on program output.
pub const PERTURBATION_LINES: [&str; 2] = ["_unused_a = 0", "_unused_b = _unused_a"];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockDefault {
    /// Returns the prompt unchanged.
    #[default]
    Echo,
    /// Returns the gold fix (or the gold Code Diff for locator prompts).
    PerfectOracle,
    /// Gold fix with [`PERTURBATION_LINES`] prepended; gold Code Diff for
    /// locator prompts.
    PerturbedOracle,
    /// Always returns this text.
    Fixed(String),
    /// Sample `i` uses behaviour `i mod len`; unsampled requests use the first.
    Rotate(Vec<MockDefault>),
    /// Every unscripted request fails.
    Fail,
}

/// A deterministic fake model: scripted replies by request fingerprint, and
/// a default behaviour for everything else.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockBehavior {
    pub script: BTreeMap<String, String>,
    pub default: MockDefault,
}

impl MockBehavior {
    pub fn new(default: MockDefault) -> Self {
        Self {
            script: BTreeMap::new(),
            default,
        }
    }

    /// Scripts every logged exchange; anything not in the log fails.
    pub fn from_session_log(path: &Path) -> io::Result<Self> {
        let entries: Vec<LogEntry> = read_jsonl(path)?;
        Ok(Self {
            script: entries.into_iter().map(|e| (e.fingerprint, e.reply)).collect(),
            default: MockDefault::Fail,
        })
    }

    pub fn reply(&self, request: &ModelRequest) -> Result<String, GatewayError> {
        let fingerprint = request.fingerprint();
        if let Some(reply) = self.script.get(&fingerprint) {
            return Ok(reply.clone());
        }
        default_reply(&self.default, request, &fingerprint)
    }
}

fn fenced(code: &str) -> String {
    format!("```\n{}\n```", code.trim_end_matches('\n'))
}

fn default_reply(
    behavior: &MockDefault,
    request: &ModelRequest,
    fingerprint: &str,
) -> Result<String, GatewayError> {
    let ctx = &request.context;
    let locator = request.template == TemplateId::SelfDebug;
    match behavior {
        MockDefault::Echo => Ok(request.prompt.clone()),
        MockDefault::Fixed(text) => Ok(text.clone()),
        MockDefault::Fail => Err(GatewayError::Unscripted(fingerprint.to_string())),
        MockDefault::PerfectOracle | MockDefault::PerturbedOracle if locator => ctx
            .gold_diff
            .as_deref()
            .map(fenced)
            .ok_or(GatewayError::MissingContext("gold_diff")),
        MockDefault::PerfectOracle => ctx
            .gold_fixed
            .as_deref()
            .map(fenced)
            .ok_or(GatewayError::MissingContext("gold_fixed")),
        MockDefault::PerturbedOracle => {
            let y = ctx
                .gold_fixed
                .as_deref()
                .ok_or(GatewayError::MissingContext("gold_fixed"))?;
            Ok(fenced(&format!("{}\n{y}", PERTURBATION_LINES.join("\n"))))
        }
        MockDefault::Rotate(behaviors) => {
            if behaviors.is_empty() {
                return Err(GatewayError::Unscripted(fingerprint.to_string()));
            }
            let idx = request.sample.unwrap_or(0) as usize % behaviors.len();
            default_reply(&behaviors[idx], request, fingerprint)
        }
    }
}

pub struct MockGateway {
    behavior: MockBehavior,
}

impl MockGateway {
    pub fn new(behavior: MockBehavior) -> Self {
        Self { behavior }
    }

    pub fn behavior(&self) -> &MockBehavior {
        &self.behavior
    }
}

impl Gateway for MockGateway {
    fn complete(&self, request: &ModelRequest) -> Result<String, GatewayError> {
        self.behavior.reply(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelgw::RequestContext;

    fn req(template: TemplateId, sample: Option<u32>) -> ModelRequest {
        ModelRequest {
            template,
            prompt: "x".into(),
            context: RequestContext {
                gold_fixed: Some("y = 2\n".into()),
                gold_diff: Some("-y = 1".into()),
                ..Default::default()
            },
            sample,
        }
    }

    #[test]
    fn echo_returns_prompt() {
        let gw = MockGateway::new(MockBehavior::new(MockDefault::Echo));
        assert_eq!(gw.complete(&req(TemplateId::Repair, None)).unwrap(), "x");
    }

    #[test]
    fn oracles() {
        let perfect = MockBehavior::new(MockDefault::PerfectOracle);
        assert_eq!(perfect.reply(&req(TemplateId::Repair, None)).unwrap(), "```\ny = 2\n```");
        assert_eq!(perfect.reply(&req(TemplateId::SelfDebug, None)).unwrap(), "```\n-y = 1\n```");
        let perturbed = MockBehavior::new(MockDefault::PerturbedOracle);
        assert_eq!(
            perturbed.reply(&req(TemplateId::Instruction, None)).unwrap(),
            "```\n_unused_a = 0\n_unused_b = _unused_a\ny = 2\n```"
        );
    }

    #[test]
    fn oracle_without_gold_fails() {
        let mut r = req(TemplateId::Repair, None);
        r.context.gold_fixed = None;
        assert_eq!(
            MockBehavior::new(MockDefault::PerfectOracle).reply(&r),
            Err(GatewayError::MissingContext("gold_fixed"))
        );
    }

    #[test]
    fn script_overrides_default_and_rotate_follows_sample() {
        let r = req(TemplateId::Repair, Some(1));
        let mut mock = MockBehavior::new(MockDefault::Rotate(vec![
            MockDefault::Echo,
            MockDefault::Fixed("second".into()),
        ]));
        assert_eq!(mock.reply(&r).unwrap(), "second");
        assert_eq!(mock.reply(&req(TemplateId::Repair, Some(2))).unwrap(), "x");
        mock.script.insert(r.fingerprint(), "scripted".into());
        assert_eq!(mock.reply(&r).unwrap(), "scripted");
    }
}
