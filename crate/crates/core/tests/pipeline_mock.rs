mod common;

use std::collections::BTreeMap;
use std::path::Path;

use adapr_core::diffkit::consistency_reported;
use adapr_core::judge::MetricsSummary;
use adapr_core::modelgw::{EndpointConfig, MockDefault};
use adapr_core::pipeline::{report_from_run, run_baseline, run_two_stage, Localization, Report, RunConfig};
use adapr_core::promptkit::{BaselineKind, TemplateId};

use common::write_synthetic_dataset;

fn mock(behavior: MockDefault) -> EndpointConfig {
    EndpointConfig::Mock {
        behavior,
        script: BTreeMap::new(),
        replay: None,
    }
}

fn config(dataset: &Path, out: &Path, locator: MockDefault, modifier: MockDefault) -> RunConfig {
    let mut c = RunConfig::new(dataset);
    c.output_dir = out.to_path_buf();
    c.locator = mock(locator);
    c.modifier = mock(modifier);
    c.workers = 4;
    c
}

fn dataset() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_synthetic_dataset(dir.path());
    dir
}

#[test]
fn failed_localization_falls_back_to_instruction_prompt() {
    let data = dataset();
    let out = tempfile::tempdir().unwrap();
    let mut c = config(data.path(), out.path(), MockDefault::Fail, MockDefault::PerfectOracle);
    c.limit = Some(5);
    let report = run_two_stage(&c).unwrap();
    assert_eq!(report.rows.len(), 5);
    for row in &report.rows {
        assert_eq!(row.template, TemplateId::Instruction);
        assert_eq!(row.localization, Some(Localization::NL));
        assert!(row.failure.as_deref().unwrap().starts_with("locate:"));
    }
    // The oracle still fixes everything through the fallback prompt.
    assert_eq!(report.acc, 100.0);
    assert_eq!(report.localization_automated.as_ref().unwrap()[&Localization::NL], 5);
}

#[test]
fn modifier_failures_never_abort_the_batch() {
    let data = dataset();
    let out = tempfile::tempdir().unwrap();
    let mut c = config(data.path(), out.path(), MockDefault::PerfectOracle, MockDefault::Fail);
    c.limit = Some(4);
    let report = run_two_stage(&c).unwrap();
    assert_eq!(report.rows.len(), 4);
    assert_eq!((report.acc, report.fr), (0.0, 100.0));
    assert!(report.rows.iter().all(|r| r.candidate.is_none() && r.failure.is_some()));
    assert!(report.rows.iter().all(|r| r.record.consistency == 0.0));
}

#[test]
fn report_is_a_fold_over_rows() {
    let data = dataset();
    let out = tempfile::tempdir().unwrap();
    let c = config(data.path(), out.path(), MockDefault::PerfectOracle, MockDefault::PerturbedOracle);
    let report = run_two_stage(&c).unwrap();
    let records: Vec<_> = report.rows.iter().map(|r| r.record.clone()).collect();
    let summary = MetricsSummary::from_records(&records).unwrap();
    assert_eq!(summary, report.summary());
    // Independent recomputation of the consistency column.
    let (instances, _) = adapr_core::corpus::load_dataset(data.path()).unwrap();
    let by_id: BTreeMap<_, _> = instances.iter().map(|i| (i.id.clone(), i)).collect();
    let mean = report
        .rows
        .iter()
        .map(|r| consistency_reported(&by_id[&r.instance_id].buggy_code, r.candidate.as_deref().unwrap()))
        .sum::<f64>()
        / report.rows.len() as f64;
    assert!((mean * 100.0 - report.consistency).abs() < 1e-9);
    let recomputed = report_from_run(out.path()).unwrap();
    assert_eq!(recomputed, report);
}

#[test]
fn run_directory_has_manifest_and_artifacts() {
    let data = dataset();
    let out = tempfile::tempdir().unwrap();
    let mut c = config(data.path(), out.path(), MockDefault::PerfectOracle, MockDefault::PerfectOracle);
    c.limit = Some(3);
    run_two_stage(&c).unwrap();
    for file in [
        "manifest.json",
        "rows.jsonl",
        "outcomes.jsonl",
        "report.json",
        "locator_session.jsonl",
        "modifier_session.jsonl",
    ] {
        assert!(out.path().join(file).is_file(), "{file}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["mode"], "two_stage");
    assert_eq!(manifest["instances"], 3);
}

#[test]
fn replay_reproduces_the_report_bit_exactly() {
    let data = dataset();
    let first = tempfile::tempdir().unwrap();
    let c = config(data.path(), first.path(), MockDefault::PerturbedOracle, MockDefault::PerturbedOracle);
    run_two_stage(&c).unwrap();

    let second = tempfile::tempdir().unwrap();
    let mut replay = config(data.path(), second.path(), MockDefault::Fail, MockDefault::Fail);
    replay.locator = EndpointConfig::Mock {
        behavior: MockDefault::Fail,
        script: BTreeMap::new(),
        replay: Some(first.path().join("locator_session.jsonl")),
    };
    replay.modifier = EndpointConfig::Mock {
        behavior: MockDefault::Fail,
        script: BTreeMap::new(),
        replay: Some(first.path().join("modifier_session.jsonl")),
    };
    replay.workers = 1;
    run_two_stage(&replay).unwrap();
    for file in ["report.json", "rows.jsonl", "outcomes.jsonl", "modifier_session.jsonl"] {
        assert_eq!(
            std::fs::read(first.path().join(file)).unwrap(),
            std::fs::read(second.path().join(file)).unwrap(),
            "{file}"
        );
    }
}

fn baseline(kind: BaselineKind, modifier: MockDefault) -> Result<Report, adapr_core::pipeline::PipelineError> {
    let data = dataset();
    let out = tempfile::tempdir().unwrap();
    let mut c = config(data.path(), out.path(), MockDefault::Fail, modifier);
    c.baseline = kind;
    c.limit = Some(5);
    run_baseline(&c)
}

#[test]
fn instruction_baseline_with_oracle_is_perfect() {
    let report = baseline(BaselineKind::Instruction, MockDefault::PerfectOracle).unwrap();
    assert_eq!(report.acc, 100.0);
    assert_eq!(report.mode, "baseline_instruction");
    assert!(report.localization_automated.is_none());
}

#[test]
fn cot_prompts_carry_the_suffix() {
    let data = dataset();
    let out = tempfile::tempdir().unwrap();
    let mut c = config(data.path(), out.path(), MockDefault::Fail, MockDefault::Echo);
    c.baseline = BaselineKind::Cot;
    c.limit = Some(2);
    run_baseline(&c).unwrap();
    let log = std::fs::read_to_string(out.path().join("modifier_session.jsonl")).unwrap();
    let entries: Vec<serde_json::Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(entries.len(), 2);
    for e in entries {
        assert!(e["prompt"].as_str().unwrap().contains("Let's think step by step."));
    }
}

#[test]
fn few_shot_without_examples_fails_before_any_call() {
    let data = dataset();
    let out = tempfile::tempdir().unwrap();
    let mut c = config(data.path(), out.path(), MockDefault::Fail, MockDefault::PerfectOracle);
    c.baseline = BaselineKind::FewShot;
    let err = run_baseline(&c).unwrap_err();
    assert!(matches!(err, adapr_core::pipeline::PipelineError::Config(_)), "{err}");
    assert!(!out.path().join("modifier_session.jsonl").exists());
}
