use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Gateway, GatewayError, ModelRequest, RequestContext};
use crate::corpus::RepairInstance;
use crate::diffkit::{parse_code_diff, DiffAnnotation, NoLocalization, ParsedAnnotation};
use crate::promptkit::{
    extract_code, render_baseline, render_repair, render_repair_fallback, self_debug_prompt,
    BaselineKind, ExtractError, FewShotExample, PromptError, TemplateId,
};
use crate::trace::TraceBundle;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LocateError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    NoLocalization(#[from] NoLocalization),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RepairError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

impl RepairError {
    pub fn category(&self) -> &'static str {
        match self {
            RepairError::Gateway(e) => e.category(),
            RepairError::Prompt(_) => "prompt",
            RepairError::Extract(_) => "unusable_reply",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Located {
    pub prompt: String,
    pub reply: Option<String>,
    pub result: Result<ParsedAnnotation, LocateError>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Repaired {
    pub template: TemplateId,
    pub prompt: String,
    pub reply: Option<String>,
    #[serde(skip)]
    pub result: Option<Result<String, RepairError>>,
}

impl Repaired {
    pub fn code(&self) -> Option<&str> {
        match &self.result {
            Some(Ok(code)) => Some(code),
            _ => None,
        }
    }

    pub fn error(&self) -> Option<&RepairError> {
        match &self.result {
            Some(Err(e)) => Some(e),
            _ => None,
        }
    }
}

fn context(instance: &RepairInstance, annotation: Option<String>) -> RequestContext {
    RequestContext {
        instance_id: instance.id.clone(),
        problem_statement: instance.problem_statement.clone(),
        buggy_code: instance.buggy_code.clone(),
        annotation,
        gold_fixed: Some(instance.fixed_code.clone()),
        gold_diff: Some(instance.diff_label.render()),
    }
}

/// Stage I: asks the locator for a Code Diff of the instance's buggy code.
pub fn locate(
    gateway: &dyn Gateway,
    instance: &RepairInstance,
    bundle: &TraceBundle,
    language: &str,
) -> Located {
    let prompt = self_debug_prompt(&instance.problem_statement, &instance.buggy_code, bundle, language);
    let request = ModelRequest {
        template: TemplateId::SelfDebug,
        prompt: prompt.clone(),
        context: context(instance, None),
        sample: None,
    };
    match gateway.complete(&request) {
        Ok(reply) => {
            let result = parse_code_diff(&reply, &instance.buggy_code).map_err(LocateError::from);
            Located {
                prompt,
                reply: Some(reply),
                result,
            }
        }
        Err(err) => Located {
            prompt,
            reply: None,
            result: Err(err.into()),
        },
    }
}

fn finish(gateway: &dyn Gateway, request: ModelRequest) -> Repaired {
    let reply = gateway.complete(&request);
    let result = match &reply {
        Ok(text) => extract_code(text).map_err(RepairError::from),
        Err(err) => Err(err.clone().into()),
    };
    Repaired {
        template: request.template,
        prompt: request.prompt,
        reply: reply.ok(),
        result: Some(result),
    }
}

/// Stage II: asks the modifier for a fixed program. Without a usable
/// annotation the instruction prompt is used instead.
pub fn repair(
    gateway: &dyn Gateway,
    instance: &RepairInstance,
    annotation: Option<&DiffAnnotation>,
    language: &str,
    sample: Option<u32>,
) -> Repaired {
    let (q, c) = (&instance.problem_statement, &instance.buggy_code);
    let located = annotation.and_then(|ann| match render_repair(q, c, ann, language) {
        Ok(prompt) => Some((prompt, ann.render())),
        Err(err) => {
            tracing::warn!(instance = %instance.id, "repair prompt fell back: {err}");
            None
        }
    });
    let request = match located {
        Some((prompt, rendered)) => ModelRequest {
            template: TemplateId::Repair,
            prompt,
            context: context(instance, Some(rendered)),
            sample,
        },
        None => ModelRequest {
            template: TemplateId::Instruction,
            prompt: render_repair_fallback(q, c, language),
            context: context(instance, None),
            sample,
        },
    };
    finish(gateway, request)
}

/// `n` sampled repairs of the same prompt, sample indices `0..n`.
pub fn repair_samples(
    gateway: &dyn Gateway,
    instance: &RepairInstance,
    annotation: Option<&DiffAnnotation>,
    language: &str,
    n: u32,
) -> Vec<Repaired> {
    (0..n)
        .map(|i| repair(gateway, instance, annotation, language, Some(i)))
        .collect()
}

/// Single-call repair with a baseline prompt.
pub fn baseline(
    gateway: &dyn Gateway,
    instance: &RepairInstance,
    kind: BaselineKind,
    examples: &[FewShotExample],
    language: &str,
) -> Repaired {
    let template = kind.template_id();
    match render_baseline(kind, &instance.problem_statement, &instance.buggy_code, examples, language) {
        Ok(prompt) => finish(
            gateway,
            ModelRequest {
                template,
                prompt,
                context: context(instance, None),
                sample: None,
            },
        ),
        Err(err) => Repaired {
            template,
            prompt: String::new(),
            reply: None,
            result: Some(Err(err.into())),
        },
    }
}
