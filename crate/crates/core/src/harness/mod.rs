//! Experiment orchestration: datasets, the per-instance pipeline, scoring,
//! aggregation and result files.
//!
//! Each instance goes through: build prompt, obtain a response, extract code,
//! run it in the sandbox, normalize the answer, then score it. Natural-language
//! methods skip the code steps. Instances run on a bounded worker pool. Records
//! are sorted by id before anything is written, so outputs do not depend on
//! scheduling.

mod config;
mod report;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{DatasetConfig, ExperimentConfig};
pub use report::{aggregate, mu_delta, render_csv, render_table, round1, score, Axis, Cell, ReportRow};

use crate::assets;
use crate::encoding::EncodingKind;
use crate::executor::{
    extract_code, extract_text_answer, normalize_answer, parse_answer_text, run_sandboxed, ExecutionStatus,
    SandboxLimits,
};
use crate::graphgen::{read_dataset, sample_dataset, GeneratorKind, Graph, Split};
use crate::model::{cached_complete, CacheMode, ChatClient, CompletionBackend, ModelConfig, ResponseCache};
use crate::prompting::{
    build_prompt, render_exemplar_code, select_exemplars, text_answer, Exemplar, ExemplarPolicy, Method, PromptBundle,
};
use crate::seed::derive_seed;
use crate::tasks::{make_task_instance, Answer, TaskInstance, TaskKind};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 2 for configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 1,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Runtime(e.to_string())
}

/// Why an instance has no usable prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    PromptError,
    ModelError,
    ExtractionError,
    ExecutionError,
    NormalizationError,
}

/// The outcome of one instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub instance_id: String,
    pub graph_ref: String,
    pub method: Method,
    pub task: TaskKind,
    pub encoding: EncodingKind,
    pub generator: Option<GeneratorKind>,
    pub model_name: String,
    pub prediction: Option<Answer>,
    pub failure: Option<FailureKind>,
    pub failure_detail: Option<String>,
    pub truth: Answer,
    pub correct: bool,
    pub execution_status: Option<ExecutionStatus>,
    /// Model latency; zero for cached responses.
    pub latency_ms: u64,
}

/// A model reply, or the reason there is none.
pub struct Reply {
    pub text: String,
    pub latency_ms: u64,
}

/// Produces the response text for a prompt.
pub trait Responder: Sync {
    fn name(&self) -> &str;
    fn respond(&self, bundle: &PromptBundle, graph: &Graph, instance: &TaskInstance) -> Result<Reply, String>;
}

/// Answers with the task's sample program (or the oracle answer for
/// natural-language methods). Isolates the pipeline from any model.
pub struct GoldResponder;

impl Responder for GoldResponder {
    fn name(&self) -> &str {
        "gold"
    }

    fn respond(&self, bundle: &PromptBundle, graph: &Graph, instance: &TaskInstance) -> Result<Reply, String> {
        let kind = bundle.metadata.encoding;
        let text = if bundle.metadata.method.is_code() {
            render_exemplar_code(instance.task, graph, &instance.targets, kind).map_err(|e| e.to_string())?
        } else {
            format!("The answer is {}.", text_answer(&instance.truth, kind).map_err(|e| e.to_string())?)
        };
        Ok(Reply { text, latency_ms: 0 })
    }
}

/// Answers through a chat model and the response cache.
pub struct ModelResponder {
    pub config: ModelConfig,
    pub backend: Box<dyn CompletionBackend>,
    pub cache: ResponseCache,
    pub mode: CacheMode,
}

impl ModelResponder {
    pub fn from_config(config: &ExperimentConfig) -> Result<Self, HarnessError> {
        let cache = ResponseCache::open(&config.cache_path).map_err(runtime)?;
        Ok(Self {
            config: config.model.clone(),
            backend: Box::new(ChatClient::new(std::time::Duration::from_secs(config.model.request_timeout_secs))),
            cache,
            mode: config.cache_mode,
        })
    }
}

impl Responder for ModelResponder {
    fn name(&self) -> &str {
        &self.config.model_name
    }

    fn respond(&self, bundle: &PromptBundle, _: &Graph, _: &TaskInstance) -> Result<Reply, String> {
        let r = cached_complete(bundle, &self.config, self.backend.as_ref(), &self.cache, self.mode)
            .map_err(|e| e.to_string())?;
        Ok(Reply {
            text: r.text,
            latency_ms: r.latency_ms,
        })
    }
}

/// Test graphs and the exemplar pool.
pub struct Datasets {
    pub test: Vec<Graph>,
    pub train: Vec<Graph>,
}

pub fn load_datasets(config: &DatasetConfig, generators: &[GeneratorKind]) -> Result<Datasets, HarnessError> {
    let mut test = Vec::new();
    let mut train = Vec::new();
    if let Some(path) = &config.path {
        let file = std::fs::File::open(path)
            .map_err(|e| HarnessError::Config(format!("cannot open dataset {}: {e}", path.display())))?;
        for g in read_dataset(std::io::BufReader::new(file)).map_err(runtime)? {
            match (g.generator(), g.split()) {
                (Some(f), Some(Split::Test)) if generators.contains(&f) => test.push(g),
                (Some(_), Some(Split::Train)) => train.push(g),
                (Some(_), Some(_)) => {}
                _ => {
                    return Err(HarnessError::Config(format!(
                        "dataset graph `{}` lacks generator or split provenance",
                        g.id()
                    )))
                }
            }
        }
        for &family in generators {
            let count = test.iter().filter(|g| g.generator() == Some(family)).count();
            if count < config.test_count {
                return Err(HarnessError::Config(format!(
                    "dataset has {count} test graph(s) of family {family}, need {}",
                    config.test_count
                )));
            }
        }
        // Keep the first `test_count` per family, in file order.
        let mut kept: BTreeMap<GeneratorKind, usize> = BTreeMap::new();
        test.retain(|g| {
            let n = kept.entry(g.generator().expect("checked above")).or_default();
            *n += 1;
            *n <= config.test_count
        });
    } else {
        let mut families: Vec<GeneratorKind> = generators.to_vec();
        families.sort();
        families.dedup();
        for family in families {
            test.extend(sample_dataset(family, config.test_count, Split::Test, config.seed).map_err(runtime)?);
            if config.train_count > 0 {
                train.extend(sample_dataset(family, config.train_count, Split::Train, config.seed).map_err(runtime)?);
            }
        }
    }
    Ok(Datasets { test, train })
}

/// Everything needed to evaluate one instance.
struct Job<'a> {
    graph: &'a Graph,
    instance: TaskInstance,
    encoding: EncodingKind,
    exemplars: &'a [Exemplar],
}

/// Inputs of a pipeline run that are independent of any config file.
pub struct Plan<'a> {
    pub tasks: &'a [TaskKind],
    pub encodings: &'a [EncodingKind],
    pub method: Method,
    pub policy: ExemplarPolicy,
    pub seed: u64,
    pub limits: &'a SandboxLimits,
    pub parallel: usize,
}

fn record_id(method: Method, task: TaskKind, encoding: EncodingKind, graph_ref: &str) -> String {
    format!("{method}/{task}/{encoding}/{graph_ref}")
}

fn evaluate(job: &Job<'_>, method: Method, limits: &SandboxLimits, responder: &dyn Responder) -> EvalRecord {
    let Job {
        graph,
        instance,
        encoding,
        exemplars,
    } = job;
    let mut record = EvalRecord {
        id: record_id(method, instance.task, *encoding, graph.id()),
        instance_id: instance.id.clone(),
        graph_ref: graph.id().to_string(),
        method,
        task: instance.task,
        encoding: *encoding,
        generator: graph.generator(),
        model_name: responder.name().to_string(),
        prediction: None,
        failure: None,
        failure_detail: None,
        truth: instance.truth.clone(),
        correct: false,
        execution_status: None,
        latency_ms: 0,
    };
    let fail = |mut record: EvalRecord, kind: FailureKind, detail: String| {
        record.failure = Some(kind);
        record.failure_detail = Some(detail);
        record
    };
    let bundle = match build_prompt(method, graph, instance, exemplars, *encoding) {
        Ok(b) => b,
        Err(e) => return fail(record, FailureKind::PromptError, e.to_string()),
    };
    let reply = match responder.respond(&bundle, graph, instance) {
        Ok(r) => r,
        Err(e) => return fail(record, FailureKind::ModelError, e),
    };
    record.latency_ms = reply.latency_ms;
    let prediction = if method.is_code() {
        let code = match extract_code(&reply.text) {
            Ok(c) => c,
            Err(e) => return fail(record, FailureKind::ExtractionError, e.to_string()),
        };
        let result = run_sandboxed(&code, instance.task, limits);
        record.execution_status = Some(result.status);
        if result.status != ExecutionStatus::Ok {
            let detail = if result.stderr_excerpt.is_empty() {
                format!("{:?}", result.status)
            } else {
                result.stderr_excerpt.clone()
            };
            return fail(record, FailureKind::ExecutionError, detail);
        }
        normalize_answer(&result, instance.task, *encoding)
    } else {
        match extract_text_answer(&reply.text) {
            Some(text) => parse_answer_text(&text, instance.task, *encoding),
            None => return fail(record, FailureKind::NormalizationError, "empty response".into()),
        }
    };
    match prediction {
        Ok(answer) => {
            record.correct = score(Some(&answer), &instance.truth);
            record.prediction = Some(answer);
            record
        }
        Err(e) => fail(record, FailureKind::NormalizationError, e.to_string()),
    }
}

/// Evaluates every (task, encoding, test graph) combination.
///
/// Question targets depend only on the seed, the graph and the task, so all
/// encodings ask the same question. Exemplars are fixed per (task, test
/// family).
pub fn run_pipeline(plan: &Plan<'_>, data: &Datasets, responder: &dyn Responder) -> Result<Vec<EvalRecord>, HarnessError> {
    let k = plan.method.shots();
    let mut exemplar_sets: BTreeMap<(TaskKind, Option<GeneratorKind>), Vec<Exemplar>> = BTreeMap::new();
    let mut jobs_spec = Vec::new();
    for &task in plan.tasks {
        for graph in &data.test {
            let family = graph.generator();
            if k > 0 && !exemplar_sets.contains_key(&(task, family)) {
                let set = select_exemplars(&data.train, task, k, plan.policy, family, derive_seed(&[&plan.seed, &"exemplars"]))
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                exemplar_sets.insert((task, family), set);
            }
            let instance = make_task_instance(graph, task, derive_seed(&[&plan.seed, &"instance", &graph.id(), &task]))
                .map_err(runtime)?;
            jobs_spec.push((graph, instance, family));
        }
    }
    let empty: Vec<Exemplar> = Vec::new();
    let jobs: Vec<Job<'_>> = jobs_spec
        .iter()
        .flat_map(|(graph, instance, family)| {
            let exemplars = exemplar_sets.get(&(instance.task, *family)).unwrap_or(&empty);
            plan.encodings.iter().map(move |&encoding| Job {
                graph,
                instance: instance.clone(),
                encoding,
                exemplars,
            })
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.parallel.max(1))
        .build()
        .map_err(runtime)?;
    let mut records: Vec<EvalRecord> =
        pool.install(|| jobs.par_iter().map(|job| evaluate(job, plan.method, plan.limits, responder)).collect());
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(records)
}

/// Fraction of correct records, in percent.
pub fn overall_accuracy(records: &[EvalRecord]) -> Option<f64> {
    (!records.is_empty()).then(|| 100.0 * records.iter().filter(|r| r.correct).count() as f64 / records.len() as f64)
}

pub fn write_records(records: &[EvalRecord], out: impl Write) -> Result<(), HarnessError> {
    let mut out = std::io::BufWriter::new(out);
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(runtime)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<EvalRecord>, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| runtime(format!("{} line {}: {e}", path.display(), i + 1))))
        .collect()
}

/// The report text: the table, then overall accuracy and failure counts.
pub fn render_report(records: &[EvalRecord], axis: Axis) -> String {
    let rows = aggregate(records, axis);
    let mut out = render_table(&rows);
    let correct = records.iter().filter(|r| r.correct).count();
    out.push_str(&format!(
        "\noverall accuracy: {} ({correct}/{})\n",
        overall_accuracy(records).map(|a| format!("{:.1}", round1(a))).unwrap_or_else(|| "-".into()),
        records.len()
    ));
    let mut failures: BTreeMap<String, usize> = BTreeMap::new();
    for r in records {
        if let Some(f) = r.failure {
            *failures.entry(serde_json::to_value(f).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()).or_default() += 1;
        }
    }
    for (kind, n) in failures {
        out.push_str(&format!("{kind}: {n}\n"));
    }
    out
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records_path: PathBuf,
    pub csv_path: PathBuf,
    pub table_path: PathBuf,
    pub manifest_path: PathBuf,
    pub records: Vec<EvalRecord>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    crate_version: &'a str,
    config: &'a ExperimentConfig,
    method: Method,
    seeds: BTreeMap<&'a str, u64>,
    graph_count: usize,
    record_count: usize,
    asset_checksums: BTreeMap<String, String>,
    shim_sha256: &'a str,
}

/// Runs a configured experiment and writes records, reports and the manifest
/// into `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig, responder: &dyn Responder) -> Result<RunOutput, HarnessError> {
    config.validate()?;
    let method = config.method()?;
    let data = load_datasets(&config.dataset, &config.generators)?;
    let plan = Plan {
        tasks: &config.tasks,
        encodings: &config.encodings,
        method,
        policy: config.exemplar_policy,
        seed: config.dataset.seed,
        limits: &config.limits,
        parallel: config.parallel,
    };
    let records = run_pipeline(&plan, &data, responder)?;

    std::fs::create_dir_all(&config.output_dir)?;
    let dir = &config.output_dir;
    let records_path = dir.join("records.jsonl");
    write_records(&records, std::fs::File::create(&records_path)?)?;
    let rows = aggregate(&records, config.axis);
    let csv_path = dir.join("report.csv");
    std::fs::write(&csv_path, render_csv(&rows))?;
    let table_path = dir.join("report.txt");
    std::fs::write(&table_path, render_report(&records, config.axis))?;
    let manifest = Manifest {
        crate_version: env!("CARGO_PKG_VERSION"),
        config,
        method,
        seeds: BTreeMap::from([("dataset", config.dataset.seed)]),
        graph_count: data.test.len(),
        record_count: records.len(),
        asset_checksums: assets::checksums(),
        shim_sha256: assets::SHIM_SHA256,
    };
    let manifest_path = dir.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).map_err(runtime)? + "\n")?;
    Ok(RunOutput {
        records_path,
        csv_path,
        table_path,
        manifest_path,
        records,
    })
}

/// Runs the sample programs through the full pipeline on fresh graphs.
pub fn gold_check(
    tasks: &[TaskKind],
    encodings: &[EncodingKind],
    generators: &[GeneratorKind],
    count: usize,
    seed: u64,
    limits: &SandboxLimits,
    parallel: usize,
) -> Result<Vec<EvalRecord>, HarnessError> {
    let data = load_datasets(
        &DatasetConfig {
            test_count: count,
            train_count: 1,
            seed,
            path: None,
        },
        generators,
    )?;
    let plan = Plan {
        tasks,
        encodings,
        method: Method::CodeGraph(1),
        policy: ExemplarPolicy::SameFamily,
        seed,
        limits,
        parallel,
    };
    run_pipeline(&plan, &data, &GoldResponder)
}
