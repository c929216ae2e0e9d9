//! Orchestration: the two-stage locate/repair/judge flow, single-call
//! baselines, and the run directory each run leaves behind.

mod config;
mod report;

pub use config::RunConfig;
pub use report::{classify_localization, InstanceRow, Localization, Report};

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::info;

use crate::corpus::{load_dataset, CorpusError, RepairInstance, Suites};
use crate::diffkit::consistency_reported;
use crate::exec::{ExecBackend, Limits, PythonBackend};
use crate::jsonl::{write_json, write_jsonl};
use crate::judge::{improve_rate, Judge, JudgeError, OutcomeRecord, VerdictSet};
use crate::modelgw::{baseline, locate, repair, Gateway, GatewayError, Repaired, SessionLog};
use crate::promptkit::{BaselineKind, FewShotExample, TemplateId};
use crate::trace::{capture_bundle, TraceBundle, TracerClient};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] CorpusError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("no instance could be scored: {0}")]
    Metrics(#[from] JudgeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Shared machinery for one run: the judge, an optional tracer and the
/// instance-level worker pool.
pub struct Pipeline {
    pub judge: Judge,
    pub tracer: Option<TracerClient>,
    pub language: String,
    pool: rayon::ThreadPool,
}

/// Buggy-program verdicts on the full suite, or the reason there are none.
struct Baseline {
    tests: Vec<crate::corpus::TestCase>,
    before: VerdictSet,
}

impl Pipeline {
    pub fn new(backend: Arc<dyn ExecBackend>, limits: Limits, workers: usize, language: &str) -> Self {
        let workers = workers.max(1);
        Self {
            judge: Judge::new(backend, limits, workers),
            tracer: None,
            language: language.to_string(),
            pool: rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .thread_name(|i| format!("instance-{i}"))
                .build()
                .expect("failed to build instance pool"),
        }
    }

    pub fn with_tracer(mut self, tracer: Option<TracerClient>) -> Self {
        self.tracer = tracer;
        self
    }

    fn suite_for(&self, inst: &RepairInstance, suites: &Suites) -> Baseline {
        let tests = suites
            .get(&inst.problem_id)
            .cloned()
            .unwrap_or_else(|| vec![inst.failed_test.clone()]);
        let before = self
            .judge
            .run_suite(&inst.buggy_code, &tests)
            .expect("suite is never empty");
        Baseline { tests, before }
    }

    pub fn trace_bundle(&self, inst: &RepairInstance) -> TraceBundle {
        capture_bundle(
            self.tracer.as_ref(),
            self.judge.backend(),
            &inst.buggy_code,
            &inst.failed_test,
            self.judge.limits(),
        )
    }

    fn score(&self, inst: &RepairInstance, base: Baseline, repaired: &Repaired) -> (OutcomeRecord, bool, Option<String>) {
        let code = repaired.code();
        let outcome = self
            .judge
            .outcome(&base.before, code, &base.tests)
            .expect("after verdicts cover the same suite");
        let consistency = code.map_or(0.0, |c| consistency_reported(&inst.buggy_code, c));
        let (improve, excluded, note) = match improve_rate(&outcome) {
            Ok(v) => (v, false, None),
            Err(e) => (0.0, true, Some(format!("invalid_instance: {e}"))),
        };
        let record = OutcomeRecord {
            instance_id: inst.id.clone(),
            before: outcome.before,
            after: outcome.after,
            improve,
            regressed: outcome.regressed,
            consistency,
        };
        (record, excluded, note)
    }

    /// Locate, repair and judge every instance.
    pub fn two_stage(
        &self,
        instances: &[RepairInstance],
        suites: &Suites,
        locator: &dyn Gateway,
        modifier: &dyn Gateway,
    ) -> Vec<InstanceRow> {
        let mut rows: Vec<InstanceRow> = self.pool.install(|| {
            instances
                .par_iter()
                .map(|inst| {
                    let base = self.suite_for(inst, suites);
                    let bundle = self.trace_bundle(inst);
                    let located = locate(locator, inst, &bundle, &self.language);
                    let (annotation, mut failure) = match &located.result {
                        Ok(parsed) => (Some(&parsed.annotation), None),
                        Err(err) => (None, Some(format!("locate: {err}"))),
                    };
                    let localization = classify_localization(&inst.diff_label, annotation);
                    let repaired = repair(modifier, inst, annotation, &self.language, None);
                    if let Some(err) = repaired.error() {
                        failure.get_or_insert(format!("{}: {err}", err.category()));
                    }
                    let (record, excluded, note) = self.score(inst, base, &repaired);
                    InstanceRow {
                        instance_id: inst.id.clone(),
                        template: repaired.template,
                        localization: Some(localization),
                        predicted_diff: annotation.map(|a| a.render()),
                        candidate: repaired.code().map(str::to_string),
                        failure: note.or(failure),
                        excluded,
                        record,
                    }
                })
                .collect()
        });
        rows.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
        rows
    }

    /// Single-call repair with a baseline prompt, judged the same way.
    pub fn baseline(
        &self,
        instances: &[RepairInstance],
        suites: &Suites,
        modifier: &dyn Gateway,
        kind: BaselineKind,
        examples: &[FewShotExample],
    ) -> Vec<InstanceRow> {
        let mut rows: Vec<InstanceRow> = self.pool.install(|| {
            instances
                .par_iter()
                .map(|inst| {
                    let base = self.suite_for(inst, suites);
                    let repaired = baseline(modifier, inst, kind, examples, &self.language);
                    let failure = repaired.error().map(|e| format!("{}: {e}", e.category()));
                    let (record, excluded, note) = self.score(inst, base, &repaired);
                    InstanceRow {
                        instance_id: inst.id.clone(),
                        template: repaired.template,
                        localization: None,
                        predicted_diff: None,
                        candidate: repaired.code().map(str::to_string),
                        failure: note.or(failure),
                        excluded,
                        record,
                    }
                })
                .collect()
        });
        rows.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
        rows
    }
}

/// Written to `manifest.json` in every run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub mode: String,
    pub config: RunConfig,
    pub instances: usize,
    pub files: Vec<String>,
}

/// Loads the configured dataset slice, sorted by instance id.
pub fn load_instances(config: &RunConfig) -> Result<(Vec<RepairInstance>, Suites), PipelineError> {
    let (mut instances, suites) = load_dataset(&config.dataset)?;
    if let Some(split) = config.split {
        instances.retain(|i| i.split == Some(split));
    }
    instances.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(limit) = config.limit {
        instances.truncate(limit);
    }
    if instances.is_empty() {
        return Err(PipelineError::Config(format!(
            "no instances selected from {}",
            config.dataset.display()
        )));
    }
    Ok((instances, suites))
}

pub fn pipeline_for(config: &RunConfig) -> Pipeline {
    let backend = Arc::new(PythonBackend::new(config.python.clone()));
    Pipeline::new(backend, config.limits, config.workers, &config.language)
        .with_tracer(config.tracer.clone().map(TracerClient::new))
}

fn finish_run(
    dir: &Path,
    mode: &str,
    config: &RunConfig,
    rows: Vec<InstanceRow>,
    logs: &[(&str, &SessionLog)],
) -> Result<Report, PipelineError> {
    std::fs::create_dir_all(dir)?;
    let report = Report::from_rows(mode, rows)?;
    let mut files = vec!["rows.jsonl".to_string(), "outcomes.jsonl".into(), "report.json".into()];
    write_jsonl(&dir.join("rows.jsonl"), &report.rows)?;
    let outcomes: Vec<&OutcomeRecord> = report.rows.iter().map(|r| &r.record).collect();
    write_jsonl(&dir.join("outcomes.jsonl"), &outcomes)?;
    write_json(&dir.join("report.json"), &report)?;
    for (name, log) in logs {
        let file = format!("{name}_session.jsonl");
        log.write(&dir.join(&file))?;
        files.push(file);
    }
    files.push("manifest.json".into());
    let manifest = RunManifest {
        mode: mode.to_string(),
        config: config.clone(),
        instances: report.rows.len(),
        files,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    info!(dir = %dir.display(), acc = report.acc, "run finished");
    Ok(report)
}

/// Full two-stage run from a config; artifacts land in `config.output_dir`.
pub fn run_two_stage(config: &RunConfig) -> Result<Report, PipelineError> {
    let (instances, suites) = load_instances(config)?;
    let locator = SessionLog::new(config.locator.build()?);
    let modifier = SessionLog::new(config.modifier.build()?);
    let pipeline = pipeline_for(config);
    let rows = pipeline.two_stage(&instances, &suites, &locator, &modifier);
    finish_run(
        &config.output_dir,
        "two_stage",
        config,
        rows,
        &[("locator", &locator), ("modifier", &modifier)],
    )
}

/// Baseline run with `config.baseline`.
pub fn run_baseline(config: &RunConfig) -> Result<Report, PipelineError> {
    let examples = config.validate_baseline()?;
    let (instances, suites) = load_instances(config)?;
    let modifier = SessionLog::new(config.modifier.build()?);
    let pipeline = pipeline_for(config);
    let rows = pipeline.baseline(&instances, &suites, &modifier, config.baseline, &examples);
    let mode = format!("baseline_{}", config.baseline.template_id());
    finish_run(&config.output_dir, &mode, config, rows, &[("modifier", &modifier)])
}

/// Recomputes a report from a run directory's `rows.jsonl`.
pub fn report_from_run(dir: &Path) -> Result<Report, PipelineError> {
    let rows: Vec<InstanceRow> = crate::jsonl::read_jsonl(&dir.join("rows.jsonl"))?;
    let manifest: RunManifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)
        .map_err(|e| PipelineError::Config(format!("manifest: {e}")))?;
    Ok(Report::from_rows(&manifest.mode, rows)?)
}

/// Session log paths a replay of `dir` would use, keyed by stage.
pub fn session_logs(dir: &Path) -> Vec<(String, PathBuf)> {
    ["locator", "modifier"]
        .into_iter()
        .map(|stage| (stage.to_string(), dir.join(format!("{stage}_session.jsonl"))))
        .filter(|(_, p)| p.exists())
        .collect()
}

/// Template used when a row came from the location-aware prompt.
pub fn used_location(row: &InstanceRow) -> bool {
    row.template == TemplateId::Repair
}
