//! Prompt rendering for the bug locator, the location-aware modifier and the
//! single-call baselines, plus code extraction from model replies.
//!
//! Templates live in `templates/*.txt` as plain text with `{{slot}}`
//! placeholders.

mod extract;
mod template;

pub use extract::{extract_code, ExtractError};
pub use template::Template;

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffkit::{DiffAnnotation, DiffError};
use crate::trace::TraceBundle;
use crate::tracefmt::{render_io, render_trace};

pub const DEFAULT_LANGUAGE: &str = "Python";

/// Stands in for the program trace when none could be captured.
pub const TRACE_UNAVAILABLE: &str = "(unavailable: no execution trace could be captured)";

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("template {template} has no slot {slot}")]
    UnknownSlot { template: &'static str, slot: String },
    #[error("template {template}: slot {slot} given twice")]
    DuplicateSlot { template: &'static str, slot: String },
    #[error("template {template}: slot {slot} not filled")]
    MissingSlot { template: &'static str, slot: String },
    #[error("few-shot prompting needs exactly 2 examples, got {0}")]
    FewShotCount(usize),
    #[error(transparent)]
    Misaligned(#[from] DiffError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    SelfDebug,
    Repair,
    Instruction,
    Cot,
    FewShot,
}

impl TemplateId {
    pub const ALL: [TemplateId; 5] = [
        TemplateId::SelfDebug,
        TemplateId::Repair,
        TemplateId::Instruction,
        TemplateId::Cot,
        TemplateId::FewShot,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::SelfDebug => "self_debug",
            TemplateId::Repair => "repair",
            TemplateId::Instruction => "instruction",
            TemplateId::Cot => "cot",
            TemplateId::FewShot => "few_shot",
        }
    }

    pub fn template(self) -> &'static Template {
        match self {
            TemplateId::SelfDebug => &SELF_DEBUG,
            TemplateId::Repair => &REPAIR,
            TemplateId::Instruction => &INSTRUCTION,
            TemplateId::Cot => &COT,
            TemplateId::FewShot => &FEW_SHOT,
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL
            .into_iter()
            .find(|t| t.as_str() == s.replace('-', "_"))
            .ok_or_else(|| format!("unknown template {s:?}"))
    }
}

/// End-to-end baseline prompt styles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Instruction,
    Cot,
    FewShot,
}

impl BaselineKind {
    pub fn template_id(self) -> TemplateId {
        match self {
            BaselineKind::Instruction => TemplateId::Instruction,
            BaselineKind::Cot => TemplateId::Cot,
            BaselineKind::FewShot => TemplateId::FewShot,
        }
    }
}

impl FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.parse::<TemplateId>()? {
            TemplateId::Instruction => Ok(BaselineKind::Instruction),
            TemplateId::Cot => Ok(BaselineKind::Cot),
            TemplateId::FewShot => Ok(BaselineKind::FewShot),
            other => Err(format!("{other} is not a baseline template")),
        }
    }
}

/// One worked repair shown in a few-shot prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub problem_statement: String,
    pub buggy_code: String,
    pub fixed_code: String,
}

static SELF_DEBUG: LazyLock<Template> =
    LazyLock::new(|| Template::new("self_debug", include_str!("../../templates/self_debug.txt")));
static REPAIR: LazyLock<Template> =
    LazyLock::new(|| Template::new("repair", include_str!("../../templates/repair.txt")));
static INSTRUCTION: LazyLock<Template> =
    LazyLock::new(|| Template::new("instruction", include_str!("../../templates/instruction.txt")));
static COT: LazyLock<Template> =
    LazyLock::new(|| Template::new("cot", include_str!("../../templates/cot.txt")));
static FEW_SHOT: LazyLock<Template> =
    LazyLock::new(|| Template::new("few_shot", include_str!("../../templates/few_shot.txt")));
static FEW_SHOT_EXAMPLE: LazyLock<Template> = LazyLock::new(|| {
    Template::new("few_shot_example", include_str!("../../templates/few_shot_example.txt"))
});

fn trim_newlines(text: &str) -> &str {
    text.trim_end_matches(['\n', '\r'])
}

/// The annotated program for the trace section, or an empty string when the
/// bundle has no events or the events do not fit the source.
pub fn trace_section(source: &str, bundle: &TraceBundle) -> String {
    if !bundle.has_events() {
        return String::new();
    }
    match render_trace(source, &bundle.events) {
        Ok(program) => program.render(),
        Err(err) => {
            tracing::warn!("dropping unusable trace: {err}");
            String::new()
        }
    }
}

/// Stage-I prompt. `io` is the rendered I/O block and `trace` the annotated
/// program; an empty trace renders the unavailable sentinel.
pub fn render_self_debug(q: &str, c: &str, io: &str, trace: &str, language: &str) -> String {
    let trace_block = if trace.trim().is_empty() {
        TRACE_UNAVAILABLE.to_string()
    } else {
        format!("```\n{}\n```", trim_newlines(trace))
    };
    SELF_DEBUG
        .render(&[
            ("language", language),
            ("q", trim_newlines(q)),
            ("c", trim_newlines(c)),
            ("io", trim_newlines(io)),
            ("trace", &trace_block),
        ])
        .expect("self_debug slots are fixed")
}

/// Stage-I prompt straight from a captured bundle.
pub fn self_debug_prompt(q: &str, c: &str, bundle: &TraceBundle, language: &str) -> String {
    render_self_debug(q, c, &render_io(&bundle.io), &trace_section(c, bundle), language)
}

/// Stage-II prompt: the buggy program followed by its Code Diff.
pub fn render_repair(
    q: &str,
    c: &str,
    annotation: &DiffAnnotation,
    language: &str,
) -> Result<String, PromptError> {
    annotation.check_aligned(c)?;
    REPAIR.render(&[
        ("language", language),
        ("q", trim_newlines(q)),
        ("c", trim_newlines(c)),
        ("d", &annotation.render()),
    ])
}

pub fn render_baseline(
    kind: BaselineKind,
    q: &str,
    c: &str,
    examples: &[FewShotExample],
    language: &str,
) -> Result<String, PromptError> {
    let mut values = vec![
        ("language", language),
        ("q", trim_newlines(q)),
        ("c", trim_newlines(c)),
    ];
    let rendered_examples;
    if kind == BaselineKind::FewShot {
        if examples.len() != 2 {
            return Err(PromptError::FewShotCount(examples.len()));
        }
        rendered_examples = examples
            .iter()
            .enumerate()
            .map(|(i, ex)| {
                FEW_SHOT_EXAMPLE.render(&[
                    ("n", &(i + 1).to_string()),
                    ("q", trim_newlines(&ex.problem_statement)),
                    ("c", trim_newlines(&ex.buggy_code)),
                    ("y", trim_newlines(&ex.fixed_code)),
                ])
            })
            .collect::<Result<Vec<_>, _>>()?
            .join("\n\n");
        values.push(("examples", &rendered_examples));
    }
    kind.template_id().template().render(&values)
}

/// Stage-II prompt when localization failed: the instruction baseline.
pub fn render_repair_fallback(q: &str, c: &str, language: &str) -> String {
    render_baseline(BaselineKind::Instruction, q, c, &[], language)
        .expect("instruction slots are fixed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffkit::{encode_code_diff, line_diff};

    #[test]
    fn template_ids_parse() {
        for id in TemplateId::ALL {
            assert_eq!(id.as_str().parse::<TemplateId>().unwrap(), id);
        }
        assert_eq!("few-shot".parse::<BaselineKind>().unwrap(), BaselineKind::FewShot);
        assert!("repair".parse::<BaselineKind>().is_err());
    }

    #[test]
    fn templates_declare_expected_slots() {
        assert_eq!(SELF_DEBUG.slots(), ["language", "q", "c", "io", "trace"]);
        assert_eq!(REPAIR.slots(), ["language", "q", "c", "d"]);
        assert_eq!(FEW_SHOT.slots(), ["language", "examples", "q", "c"]);
        assert_eq!(FEW_SHOT_EXAMPLE.slots(), ["n", "q", "c", "y"]);
    }

    #[test]
    fn language_is_substituted() {
        let p = render_self_debug("q", "x = 1", "io", "", "Python");
        assert!(p.contains("written in Python,"));
        assert!(!p.contains("{{"));
        assert!(p.ends_with(TRACE_UNAVAILABLE));
    }

    #[test]
    fn repair_rejects_misaligned_annotation() {
        let ann = encode_code_diff("a\nb", &line_diff("a\nb", "a\nc")).unwrap();
        assert!(render_repair("q", "a\nb", &ann, "Python").is_ok());
        assert!(matches!(
            render_repair("q", "a\nb\nc", &ann, "Python"),
            Err(PromptError::Misaligned(_))
        ));
    }

    #[test]
    fn all_keep_annotation_still_renders() {
        let c = "a = 1\nprint(a)";
        let ann = encode_code_diff(c, &line_diff(c, c)).unwrap();
        let p = render_repair("q", c, &ann, "Python").unwrap();
        assert!(p.contains(" a = 1\n print(a)"));
    }

    #[test]
    fn few_shot_needs_two_examples() {
        let ex = FewShotExample {
            problem_statement: "q".into(),
            buggy_code: "a".into(),
            fixed_code: "b".into(),
        };
        for n in [0, 1, 3] {
            let examples = vec![ex.clone(); n];
            assert_eq!(
                render_baseline(BaselineKind::FewShot, "q", "c", &examples, "Python"),
                Err(PromptError::FewShotCount(n))
            );
        }
        assert!(render_baseline(BaselineKind::FewShot, "q", "c", &[ex.clone(), ex], "Python").is_ok());
    }

    #[test]
    fn buggy_code_is_first_fenced_block() {
        let c = "n = int(input())\nprint(n + 1)";
        let ann = encode_code_diff(c, &line_diff(c, c)).unwrap();
        for prompt in [
            render_self_debug("q", c, "io", "x # step=1", "Python"),
            render_repair("q", c, &ann, "Python").unwrap(),
            render_baseline(BaselineKind::Cot, "q", c, &[], "Python").unwrap(),
        ] {
            assert_eq!(extract_code(&prompt).unwrap(), c);
        }
    }

    #[test]
    fn distinct_inputs_give_distinct_prompts() {
        let a = render_baseline(BaselineKind::Instruction, "ab", "c", &[], "Python").unwrap();
        let b = render_baseline(BaselineKind::Instruction, "a", "bc", &[], "Python").unwrap();
        assert_ne!(a, b);
    }
}
