use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::corpus::Split;
use crate::exec::Limits;
use crate::modelgw::EndpointConfig;
use crate::promptkit::{BaselineKind, FewShotExample, DEFAULT_LANGUAGE};

fn default_language() -> String {
    DEFAULT_LANGUAGE.to_string()
}

fn default_python() -> String {
    "python3".to_string()
}

fn default_workers() -> usize {
    4
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs/latest")
}

/// Settings shared by every pipeline command. All keys are optional in a
/// config file except `dataset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset directory (or an `instances.jsonl` file).
    pub dataset: PathBuf,
    /// Stage-I endpoint.
    #[serde(default)]
    pub locator: EndpointConfig,
    /// Stage-II endpoint, also used by baseline runs.
    #[serde(default)]
    pub modifier: EndpointConfig,
    #[serde(default = "default_baseline")]
    pub baseline: BaselineKind,
    /// Few-shot examples inline ...
    #[serde(default)]
    pub examples: Vec<FewShotExample>,
    /// ... or from a JSON file holding a list of examples.
    #[serde(default)]
    pub examples_file: Option<PathBuf>,
    #[serde(default)]
    pub limits: Limits,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_language")]
    pub language: String,
    /// Tracer command, e.g. `["python3", "tracer.py"]`; without one the
    /// buggy program is run plainly and the trace is marked unavailable.
    #[serde(default)]
    pub tracer: Option<Vec<String>>,
    #[serde(default = "default_python")]
    pub python: String,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Only run instances of this split.
    #[serde(default)]
    pub split: Option<Split>,
    /// Only run the first `limit` instances (by id).
    #[serde(default)]
    pub limit: Option<usize>,
}

fn default_baseline() -> BaselineKind {
    BaselineKind::Instruction
}

impl RunConfig {
    pub fn new(dataset: impl Into<PathBuf>) -> Self {
        Self {
            dataset: dataset.into(),
            locator: EndpointConfig::default(),
            modifier: EndpointConfig::default(),
            baseline: default_baseline(),
            examples: Vec::new(),
            examples_file: None,
            limits: Limits::default(),
            seed: 0,
            output_dir: default_output_dir(),
            language: default_language(),
            tracer: None,
            python: default_python(),
            workers: default_workers(),
            split: None,
            limit: None,
        }
    }

    /// Few-shot examples from the inline list or the examples file.
    pub fn few_shot_examples(&self) -> Result<Vec<FewShotExample>, PipelineError> {
        match &self.examples_file {
            Some(path) if self.examples.is_empty() => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
            }
            Some(_) => Err(PipelineError::Config(
                "set either examples or examples_file, not both".into(),
            )),
            None => Ok(self.examples.clone()),
        }
    }

    /// Checks that can fail before any model call.
    pub fn validate_baseline(&self) -> Result<Vec<FewShotExample>, PipelineError> {
        let examples = self.few_shot_examples()?;
        if self.baseline == BaselineKind::FewShot && examples.len() != 2 {
            return Err(PipelineError::Config(format!(
                "few_shot baseline needs exactly 2 examples, {} configured",
                examples.len()
            )));
        }
        Ok(examples)
    }
}
