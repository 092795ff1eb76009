//! Evaluation pipeline for program-aided graph reasoning with language models.
//!
//! Random graphs are rendered into text under six encodings and turned into
//! prompts. Model completions are collected, and the code is extracted and
//! executed in a sandbox. Answers are scored by exact match and aggregated
//! into mean/spread reports.

pub mod assets;
pub mod encoding;
pub mod executor;
pub mod graphgen;
pub mod harness;
pub mod model;
pub mod prompting;
pub mod seed;
pub mod tasks;
pub mod template;

pub use encoding::{encode_graph, node_label, parse_adjacency_text, EncodingError, EncodingKind, GraphText};
pub use graphgen::{
    dataset_stats, generate_graph, sample_dataset, DatasetStats, GeneratorKind, GeneratorParams, GeneratorSpec,
    Graph, GraphError, Split,
};
pub use tasks::{make_task_instance, oracle_answer, render_question, Answer, GroundTruth, TaskInstance, TaskKind};
pub use executor::{extract_code, normalize_answer, run_sandboxed, ExecutionResult, ExecutionStatus, ExtractedCode, SandboxLimits};
pub use prompting::{build_prompt, render_exemplar_code, select_exemplars, ExemplarPolicy, Exemplar, Method, PromptBundle};
pub use model::{cached_complete, CacheMode, ChatClient, CompletionBackend, ModelConfig, ModelError, ModelResponse, ResponseCache};
pub use harness::{
    aggregate, gold_check, run_experiment, run_pipeline, score, Axis, EvalRecord, ExperimentConfig, FailureKind,
    GoldResponder, HarnessError, ModelResponder, ReportRow, Responder,
};
