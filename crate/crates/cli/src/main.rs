//! `adapr` command-line driver.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use adapr_core::corpus::{
    build_pairs, load_archive, split_and_cap, write_dataset, PairingConfig, RepairInstance, Split,
    SplitConfig, SIMILARITY_THRESHOLD,
};
use adapr_core::diffkit::DiffAnnotation;
use adapr_core::exec::PythonBackend;
use adapr_core::jsonl::{read_jsonl, write_json, write_jsonl};
use adapr_core::judge::{Judge, MetricsSummary, OutcomeRecord};
use adapr_core::modelgw::{locate, repair, repair_samples, EndpointConfig, MockDefault, SessionLog};
use adapr_core::pipeline::{
    classify_localization, load_instances, pipeline_for, report_from_run, run_baseline, run_two_stage,
    Localization, Report, RunConfig, RunManifest,
};
use adapr_core::promptkit::{trace_section, BaselineKind};
use adapr_core::trainprep::{
    export_locator_records, export_modifier_records, make_hybrid_split, mine_preference_pairs,
    PreferenceRecord,
};
use adapr_core::tracefmt::render_io;

#[derive(Parser)]
#[command(name = "adapr", version, about = "Two-stage program repair harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pair submissions from an archive into a split repair dataset.
    BuildDataset(BuildArgs),
    /// Capture and print the trace bundle of one instance's failing run.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Instance id.
        #[arg(long)]
        instance: String,
    },
    /// Stage I only: predict a Code Diff per instance.
    Locate {
        #[command(flatten)]
        common: Common,
    },
    /// Stage II only, with gold Code Diffs or those from a `locate` run.
    Repair {
        #[command(flatten)]
        common: Common,
        /// `predictions.jsonl` written by `locate`.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Judge candidate programs (`{"instance_id", "code"}` JSONL).
    Judge {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        candidates: PathBuf,
    },
    /// Full two-stage run: trace, locate, repair, judge, report.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Single-call baseline run.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_baseline)]
        kind: Option<BaselineKind>,
    },
    /// Write training JSONL for the locator, the modifier, or preference tuning.
    ExportTrain(ExportArgs),
    /// Recompute and print the report of a finished run directory.
    Report {
        run_dir: PathBuf,
        /// Print the full report JSON instead of the summary table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct BuildArgs {
    /// Archive root with `submissions/` and `problems/`.
    #[arg(long)]
    archive: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = SIMILARITY_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value = "python3")]
    python: String,
    #[arg(long, default_value_t = 4)]
    workers: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportKind {
    Locator,
    Modifier,
    Preference,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    kind: ExportKind,
    /// Gold-to-predicted ratio for the modifier export.
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    /// Candidates per instance sampled from the modifier for preference pairs.
    #[arg(long, default_value_t = 4)]
    samples: u32,
    /// Pre-generated candidates (`{"instance_id", "code"}` JSONL) instead of sampling.
    #[arg(long)]
    candidates: Option<PathBuf>,
}

/// Options shared by the pipeline commands; flags override the config file.
#[derive(Args)]
struct Common {
    /// TOML run config.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_parser = parse_split)]
    split: Option<Split>,
    #[arg(long)]
    limit: Option<usize>,
    /// Tracer command line, e.g. "python3 tracer.py".
    #[arg(long)]
    tracer: Option<String>,
    #[arg(long)]
    python: Option<String>,
    #[arg(long)]
    language: Option<String>,
    /// Mock locator: echo, perfect_oracle, perturbed_oracle or fail.
    #[arg(long, value_parser = parse_mock)]
    locator_mock: Option<MockDefault>,
    #[arg(long, value_parser = parse_mock)]
    modifier_mock: Option<MockDefault>,
    /// Replay a recorded locator session log.
    #[arg(long)]
    locator_replay: Option<PathBuf>,
    #[arg(long)]
    modifier_replay: Option<PathBuf>,
}

fn parse_baseline(s: &str) -> Result<BaselineKind, String> {
    s.parse()
}

fn parse_split(s: &str) -> Result<Split, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown split {s:?}"))
}

fn parse_mock(s: &str) -> Result<MockDefault, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|_| format!("unknown mock behaviour {s:?}"))
}

fn mock(behavior: Option<MockDefault>, replay: Option<PathBuf>) -> Option<EndpointConfig> {
    if behavior.is_none() && replay.is_none() {
        return None;
    }
    Some(EndpointConfig::Mock {
        behavior: behavior.unwrap_or_default(),
        script: BTreeMap::new(),
        replay,
    })
}

impl Common {
    fn load(self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                toml::from_str::<RunConfig>(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => match &self.dataset {
                Some(d) => RunConfig::new(d),
                None => bail!("either --config or --dataset is required"),
            },
        };
        if let Some(v) = self.dataset {
            config.dataset = v;
        }
        if let Some(v) = self.output_dir {
            config.output_dir = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.workers {
            config.workers = v;
        }
        if self.split.is_some() {
            config.split = self.split;
        }
        if self.limit.is_some() {
            config.limit = self.limit;
        }
        if let Some(v) = self.tracer {
            config.tracer = Some(v.split_whitespace().map(str::to_string).collect());
        }
        if let Some(v) = self.python {
            config.python = v;
        }
        if let Some(v) = self.language {
            config.language = v;
        }
        if let Some(e) = mock(self.locator_mock, self.locator_replay) {
            config.locator = e;
        }
        if let Some(e) = mock(self.modifier_mock, self.modifier_replay) {
            config.modifier = e;
        }
        Ok(config)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Candidate {
    instance_id: String,
    code: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Prediction {
    instance_id: String,
    localization: Localization,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    predicted_diff: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
}

fn write_manifest(config: &RunConfig, mode: &str, instances: usize, files: &[&str]) -> Result<()> {
    let manifest = RunManifest {
        mode: mode.to_string(),
        config: config.clone(),
        instances,
        files: files.iter().map(|f| f.to_string()).chain(["manifest.json".to_string()]).collect(),
    };
    write_json(&config.output_dir.join("manifest.json"), &manifest)?;
    Ok(())
}

fn print_report(report: &Report) {
    println!("mode         {}", report.mode);
    println!("instances    {} counted, {} excluded", report.counted, report.excluded);
    println!("Acc          {:.2}%", report.acc);
    println!("Improve      {:.2}%", report.improve);
    println!("Consistency  {:.2}%", report.consistency);
    println!("FR           {:.2}%", report.fr);
    if let Some(tally) = &report.localization_automated {
        let parts: Vec<String> = tally.iter().map(|(k, v)| format!("{k:?}={v}")).collect();
        println!("localization (automated) {}", parts.join(" "));
    }
}

fn build_dataset(args: BuildArgs) -> Result<()> {
    let archive = load_archive(&args.archive)?;
    let backend = std::sync::Arc::new(PythonBackend::new(args.python));
    let judge = Judge::new(backend, Default::default(), args.workers);
    let pairing = PairingConfig {
        threshold: args.threshold,
        seed: args.seed,
    };
    let instances = build_pairs(&archive.submissions, &archive.problems, &judge, &pairing);
    tracing::info!(pairs = instances.len(), "paired submissions");
    let dataset = split_and_cap(instances, args.seed, &SplitConfig::default())?;
    write_dataset(&args.out, &dataset, &archive.problems)?;
    println!("{}", serde_json::to_string_pretty(&dataset.manifest.split_counts)?);
    Ok(())
}

fn find<'a>(instances: &'a [RepairInstance], id: &str) -> Result<&'a RepairInstance> {
    instances
        .iter()
        .find(|i| i.id == id)
        .with_context(|| format!("no instance {id}"))
}

fn trace(config: RunConfig, id: &str) -> Result<()> {
    let (instances, _) = load_instances(&RunConfig { limit: None, ..config.clone() })?;
    let inst = find(&instances, id)?;
    let pipeline = pipeline_for(&config);
    let bundle = pipeline.trace_bundle(inst);
    println!("I/O data:\n{}\n", render_io(&bundle.io));
    println!("Program Trace Information:\n{}", trace_section(&inst.buggy_code, &bundle));
    Ok(())
}

fn locate_cmd(config: RunConfig) -> Result<()> {
    let (instances, _) = load_instances(&config)?;
    let pipeline = pipeline_for(&config);
    let gateway = SessionLog::new(config.locator.build()?);
    let mut predictions: Vec<Prediction> = instances
        .iter()
        .map(|inst| {
            let located = locate(&gateway, inst, &pipeline.trace_bundle(inst), &config.language);
            let (annotation, failure) = match &located.result {
                Ok(p) => (Some(&p.annotation), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Prediction {
                instance_id: inst.id.clone(),
                localization: classify_localization(&inst.diff_label, annotation),
                predicted_diff: annotation.map(DiffAnnotation::render),
                failure,
            }
        })
        .collect();
    predictions.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    std::fs::create_dir_all(&config.output_dir)?;
    write_jsonl(&config.output_dir.join("predictions.jsonl"), &predictions)?;
    gateway.write(&config.output_dir.join("locator_session.jsonl"))?;
    write_manifest(&config, "locate", predictions.len(), &["predictions.jsonl", "locator_session.jsonl"])?;
    let mut tally: BTreeMap<Localization, usize> = BTreeMap::new();
    for p in &predictions {
        *tally.entry(p.localization).or_default() += 1;
    }
    println!("{tally:?}");
    Ok(())
}

fn repair_cmd(config: RunConfig, predictions: Option<PathBuf>) -> Result<()> {
    let (instances, _) = load_instances(&config)?;
    let predicted: Option<BTreeMap<String, Prediction>> = match predictions {
        Some(path) => Some(
            read_jsonl::<Prediction>(&path)?
                .into_iter()
                .map(|p| (p.instance_id.clone(), p))
                .collect(),
        ),
        None => None,
    };
    let gateway = SessionLog::new(config.modifier.build()?);
    let mut candidates = Vec::new();
    for inst in &instances {
        let annotation = match &predicted {
            None => Some(inst.diff_label.clone()),
            Some(map) => map
                .get(&inst.id)
                .and_then(|p| p.predicted_diff.as_deref())
                .and_then(|d| adapr_core::diffkit::parse_code_diff(d, &inst.buggy_code).ok())
                .map(|p| p.annotation),
        };
        let repaired = repair(&gateway, inst, annotation.as_ref(), &config.language, None);
        match repaired.code() {
            Some(code) => candidates.push(Candidate {
                instance_id: inst.id.clone(),
                code: code.to_string(),
            }),
            None => tracing::warn!(instance = %inst.id, "no candidate: {:?}", repaired.error()),
        }
    }
    std::fs::create_dir_all(&config.output_dir)?;
    write_jsonl(&config.output_dir.join("candidates.jsonl"), &candidates)?;
    gateway.write(&config.output_dir.join("modifier_session.jsonl"))?;
    write_manifest(&config, "repair", instances.len(), &["candidates.jsonl", "modifier_session.jsonl"])?;
    println!("{} candidates for {} instances", candidates.len(), instances.len());
    Ok(())
}

fn judge_cmd(config: RunConfig, candidates: &Path) -> Result<()> {
    let (instances, suites) = load_instances(&config)?;
    let by_id: BTreeMap<String, String> = read_jsonl::<Candidate>(candidates)?
        .into_iter()
        .map(|c| (c.instance_id, c.code))
        .collect();
    let pipeline = pipeline_for(&config);
    let mut records = Vec::new();
    for inst in &instances {
        let tests = suites.get(&inst.problem_id).cloned().unwrap_or_else(|| vec![inst.failed_test.clone()]);
        let before = pipeline.judge.run_suite(&inst.buggy_code, &tests)?;
        let code = by_id.get(&inst.id).map(String::as_str);
        let outcome = pipeline.judge.outcome(&before, code, &tests)?;
        let Ok(improve) = adapr_core::judge::improve_rate(&outcome) else {
            tracing::warn!(instance = %inst.id, "buggy program fails no test; skipped");
            continue;
        };
        records.push(OutcomeRecord {
            instance_id: inst.id.clone(),
            regressed: outcome.regressed,
            before: outcome.before,
            after: outcome.after,
            improve,
            consistency: code.map_or(0.0, |c| adapr_core::diffkit::consistency_reported(&inst.buggy_code, c)),
        });
    }
    let summary = MetricsSummary::from_records(&records)?;
    std::fs::create_dir_all(&config.output_dir)?;
    write_jsonl(&config.output_dir.join("outcomes.jsonl"), &records)?;
    write_json(&config.output_dir.join("summary.json"), &summary)?;
    write_manifest(&config, "judge", records.len(), &["outcomes.jsonl", "summary.json"])?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn export_train(args: ExportArgs) -> Result<()> {
    let config = args.common.load()?;
    let (instances, suites) = load_instances(&config)?;
    let pipeline = pipeline_for(&config);
    std::fs::create_dir_all(&config.output_dir)?;
    let (file, count) = match args.kind {
        ExportKind::Locator => {
            let items: Vec<_> = instances.iter().map(|i| (i.clone(), pipeline.trace_bundle(i))).collect();
            let records = export_locator_records(&items, &config.language);
            write_jsonl(&config.output_dir.join("locator.jsonl"), &records)?;
            ("locator.jsonl", records.len())
        }
        ExportKind::Modifier => {
            let gateway = SessionLog::new(config.locator.build()?);
            let bundle_for = |i: &RepairInstance| pipeline.trace_bundle(i);
            let split = make_hybrid_split(&instances, args.k, &gateway, &bundle_for, config.seed, &config.language)?;
            let records = export_modifier_records(&split, &config.language)?;
            write_jsonl(&config.output_dir.join("modifier.jsonl"), &records)?;
            gateway.write(&config.output_dir.join("locator_session.jsonl"))?;
            ("modifier.jsonl", records.len())
        }
        ExportKind::Preference => {
            let candidates: BTreeMap<String, Vec<String>> = match &args.candidates {
                Some(path) => {
                    let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
                    for c in read_jsonl::<Candidate>(path)? {
                        map.entry(c.instance_id).or_default().push(c.code);
                    }
                    map
                }
                None => {
                    let gateway = SessionLog::new(config.modifier.build()?);
                    let map = instances
                        .iter()
                        .map(|inst| {
                            let codes = repair_samples(&gateway, inst, Some(&inst.diff_label), &config.language, args.samples)
                                .iter()
                                .filter_map(|r| r.code().map(str::to_string))
                                .collect();
                            (inst.id.clone(), codes)
                        })
                        .collect();
                    gateway.write(&config.output_dir.join("modifier_session.jsonl"))?;
                    map
                }
            };
            let pairs = mine_preference_pairs(&instances, &candidates, &suites, &pipeline.judge, &config.language);
            let records: Vec<PreferenceRecord> = pairs.iter().map(PreferenceRecord::from).collect();
            write_jsonl(&config.output_dir.join("preference.jsonl"), &records)?;
            ("preference.jsonl", records.len())
        }
    };
    write_manifest(&config, "export_train", instances.len(), &[file])?;
    println!("{count} records written to {}", config.output_dir.join(file).display());
    Ok(())
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::BuildDataset(args) => build_dataset(args)?,
        Command::Trace { common, instance } => trace(common.load()?, &instance)?,
        Command::Locate { common } => locate_cmd(common.load()?)?,
        Command::Repair { common, predictions } => repair_cmd(common.load()?, predictions)?,
        Command::Judge { common, candidates } => judge_cmd(common.load()?, &candidates)?,
        Command::Run { common } => print_report(&run_two_stage(&common.load()?)?),
        Command::Baseline { common, kind } => {
            let mut config = common.load()?;
            if let Some(kind) = kind {
                config.baseline = kind;
            }
            print_report(&run_baseline(&config)?);
        }
        Command::ExportTrain(args) => export_train(args)?,
        Command::Report { run_dir, json } => {
            let report = report_from_run(&run_dir)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print_report(&report);
            }
        }
    }
    Ok(())
}
