//! Prompt assembly for zero-shot, few-shot, chain-of-thought and
//! program-aided (CodeGraph) prompting.
//!
//! A prompt is a task description followed by exemplars, each with a question
//! and an answer. For CodeGraph the answer is a sample program. The prompt
//! ends with the test question and the `A:` cue.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::assets;
use crate::encoding::{encode_graph, node_label, EncodingError, EncodingKind};
use crate::graphgen::{GeneratorKind, Graph};
use crate::seed::derive_seed;
use crate::tasks::{display_answer, make_task_instance, render_question, Answer, TaskError, TaskInstance, TaskKind};
use crate::template::{Template, TemplateError};

/// Answer-format line for zero-shot and chain-of-thought prompts.
pub const TEXT_ANSWER_FORMAT: &str = "End your response with \"The answer is X.\", where X is the answer.";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error("template: {0}")]
    Template(#[from] TemplateError),
}

/// Prompting method with its shot count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    ZeroShot,
    FewShot(usize),
    Cot(usize),
    CodeGraph(usize),
}

impl Method {
    /// Builds a method from its name and shot count, as written in configs.
    pub fn from_parts(name: &str, shots: usize) -> Result<Self, PromptError> {
        let method = match name.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "zero_shot" | "zeroshot" => {
                if shots != 0 {
                    return Err(PromptError::InvalidArgument(format!("zero_shot takes 0 shots, got {shots}")));
                }
                return Ok(Method::ZeroShot);
            }
            "few_shot" | "fewshot" => Method::FewShot(shots),
            "cot" => Method::Cot(shots),
            "codegraph" => Method::CodeGraph(shots),
            other => return Err(PromptError::InvalidArgument(format!("unknown method `{other}`"))),
        };
        if shots == 0 {
            return Err(PromptError::InvalidArgument(format!("{} needs at least one shot", method.name())));
        }
        Ok(method)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::ZeroShot => "zero_shot",
            Method::FewShot(_) => "few_shot",
            Method::Cot(_) => "cot",
            Method::CodeGraph(_) => "codegraph",
        }
    }

    pub fn shots(self) -> usize {
        match self {
            Method::ZeroShot => 0,
            Method::FewShot(k) | Method::Cot(k) | Method::CodeGraph(k) => k,
        }
    }

    pub fn is_code(self) -> bool {
        matches!(self, Method::CodeGraph(_))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::ZeroShot => f.write_str("zero_shot"),
            other => write!(f, "{}-{}", other.name(), other.shots()),
        }
    }
}

impl FromStr for Method {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.rsplit_once('-') {
            Some((name, shots)) if shots.bytes().all(|b| b.is_ascii_digit()) && !shots.is_empty() => {
                let shots = shots
                    .parse()
                    .map_err(|_| PromptError::InvalidArgument(format!("bad shot count in `{s}`")))?;
                Method::from_parts(name, shots)
            }
            _ => Method::from_parts(s, 0),
        }
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which training graphs may serve as exemplars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExemplarPolicy {
    /// Exemplars come from the test graph's own family.
    #[default]
    SameFamily,
    /// Exemplars always come from one family, whatever the test family is.
    FixedFamily(GeneratorKind),
}

/// A training graph with a question about it.
#[derive(Debug, Clone, PartialEq)]
pub struct Exemplar {
    pub graph: Graph,
    pub instance: TaskInstance,
}

/// One rendered exemplar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Turn {
    /// `Q: …` line followed by the encoded graph.
    pub question_text: String,
    /// Text after the `A:` cue: plain answer, reasoning chain, or code.
    pub answer_text: String,
    pub source_graph: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptMetadata {
    pub method: Method,
    pub task: TaskKind,
    pub encoding: EncodingKind,
    pub graph_ref: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptBundle {
    /// Task description.
    pub header: String,
    /// Instruction repeated before every question (CodeGraph only).
    pub reminder: Option<String>,
    pub turns: Vec<Turn>,
    /// Test question and encoded graph, ending with `A:`.
    pub test_question: String,
    pub metadata: PromptMetadata,
}

impl PromptBundle {
    /// The complete prompt, sent as a single user message.
    pub fn text(&self) -> String {
        let separator = if self.metadata.method.is_code() { "\n" } else { " " };
        let mut parts = vec![self.header.clone()];
        for turn in &self.turns {
            parts.extend(self.reminder.clone());
            parts.push(turn.question_text.clone());
            parts.push(format!("A:{separator}{}", turn.answer_text));
        }
        parts.extend(self.reminder.clone());
        parts.push(self.test_question.clone());
        parts.join("\n")
    }
}

/// The task description that opens a prompt.
pub fn render_task_description(task: TaskKind, method: Method) -> String {
    match method {
        Method::CodeGraph(_) => {
            let (sentence, _) = codegraph_lines(task);
            format!("{}\n{sentence}", assets::trimmed(assets::CODEGRAPH_INTRO))
        }
        Method::FewShot(_) => assets::trimmed(assets::text_description(task)).to_string(),
        Method::ZeroShot | Method::Cot(_) => {
            format!("{}\n{TEXT_ANSWER_FORMAT}", assets::trimmed(assets::text_description(task)))
        }
    }
}

/// `(task sentence, code instruction)` for program-aided prompts.
fn codegraph_lines(task: TaskKind) -> (&'static str, &'static str) {
    assets::trimmed(assets::codegraph_description(task))
        .split_once('\n')
        .expect("codegraph description asset has two lines")
}

/// The instruction line repeated before every question in CodeGraph prompts.
pub fn code_instruction(task: TaskKind) -> &'static str {
    codegraph_lines(task).1
}

fn quoted(label: &str) -> String {
    format!("'{label}'")
}

/// Instantiates the task's sample program for one graph.
///
/// Only the data bindings vary; the program body is the asset text. For
/// cycle check, the edge binding lists every edge in both orientations
/// because the sample program builds a directed adjacency from it.
pub fn render_exemplar_code(
    task: TaskKind,
    graph: &Graph,
    targets: &[usize],
    kind: EncodingKind,
) -> Result<String, PromptError> {
    if targets.len() != task.arity() {
        return Err(PromptError::InvalidArgument(format!(
            "{task} takes {} target(s), got {}",
            task.arity(),
            targets.len()
        )));
    }
    let labels = (0..graph.node_count())
        .map(|i| node_label(i, kind))
        .collect::<Result<Vec<_>, _>>()?;
    let node_list = format!(
        "[{}]",
        labels.iter().map(|l| quoted(l)).collect::<Vec<_>>().join(",")
    );
    let mut pairs = Vec::new();
    for &(u, v) in graph.edges() {
        pairs.push((u, v));
        if task == TaskKind::CycleCheck {
            pairs.push((v, u));
        }
    }
    let edge_list = if pairs.is_empty() {
        "[]".to_string()
    } else {
        let items: Vec<String> = pairs
            .iter()
            .map(|&(u, v)| format!("({}, {})", quoted(&labels[u]), quoted(&labels[v])))
            .collect();
        format!("[{}]", items.join(",\n"))
    };
    let target = |i: usize| {
        targets
            .get(i)
            .and_then(|&t| labels.get(t))
            .map(|l| quoted(l))
            .ok_or_else(|| PromptError::InvalidArgument(format!("target outside 0..{}", graph.node_count())))
    };
    let template = Template::parse(assets::program(task))?;
    let code = match task {
        TaskKind::NodeCount => template.render(&[("node_list", &node_list)])?,
        TaskKind::EdgeCount => template.render(&[("edge_list", &edge_list)])?,
        TaskKind::CycleCheck => template.render(&[("node_list", &node_list), ("edge_list", &edge_list)])?,
        TaskKind::NodeDegree | TaskKind::ConnectedNodes => {
            template.render(&[("edge_list", &edge_list), ("target_node", &target(0)?)])?
        }
        TaskKind::EdgeExistence => template.render(&[
            ("edge_list", &edge_list),
            ("source_node", &target(0)?),
            ("target_node", &target(1)?),
        ])?,
    };
    Ok(assets::trimmed(&code).to_string())
}

/// Draws `k` exemplars from the training graphs.
///
/// Deterministic in `(train, task, k, policy, test_family, seed)`.
pub fn select_exemplars(
    train: &[Graph],
    task: TaskKind,
    k: usize,
    policy: ExemplarPolicy,
    test_family: Option<GeneratorKind>,
    seed: u64,
) -> Result<Vec<Exemplar>, PromptError> {
    if k == 0 {
        return Err(PromptError::InvalidArgument("k must be at least 1".into()));
    }
    let family = match policy {
        ExemplarPolicy::SameFamily => test_family,
        ExemplarPolicy::FixedFamily(f) => Some(f),
    };
    let candidates: Vec<&Graph> = train
        .iter()
        .filter(|g| family.is_none() || g.generator() == family)
        .collect();
    if candidates.len() < k {
        return Err(PromptError::InvalidArgument(format!(
            "need {k} exemplar graph(s){} but the training split has {}",
            family.map(|f| format!(" of family {f}")).unwrap_or_default(),
            candidates.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[&seed, &"exemplars", &task]));
    index::sample(&mut rng, candidates.len(), k)
        .into_iter()
        .map(|i| {
            let graph = candidates[i].clone();
            let instance = make_task_instance(&graph, task, derive_seed(&[&seed, &graph.id(), &task]))?;
            Ok(Exemplar { graph, instance })
        })
        .collect()
}

fn pair_text(labels: &[String], u: usize, v: usize) -> String {
    format!("({}, {})", labels[u], labels[v])
}

/// A step-by-step rationale derived from the graph structure, ending with
/// `The answer is X.`
pub fn cot_rationale(graph: &Graph, instance: &TaskInstance, kind: EncodingKind) -> Result<String, PromptError> {
    let labels = encode_graph(graph, kind)?.node_labels;
    let answer = text_answer(&instance.truth, kind)?;
    let mut steps: Vec<String> = Vec::new();
    match instance.task {
        TaskKind::NodeCount => {
            steps.push(format!("The nodes are {}.", labels.join(", ")));
            steps.push(format!("Counting them one by one gives {} nodes.", labels.len()));
        }
        TaskKind::EdgeCount => {
            for (i, &(u, v)) in graph.edges().iter().enumerate() {
                steps.push(format!("Edge {}: {}.", i + 1, pair_text(&labels, u, v)));
            }
            steps.push(format!("Counting them gives {} edges.", graph.edge_count()));
        }
        TaskKind::EdgeExistence => {
            let (s, t) = (instance.targets[0], instance.targets[1]);
            let found = graph.has_edge(s, t);
            steps.push(format!(
                "We look for the edge {} or {} in the edge list.",
                pair_text(&labels, s, t),
                pair_text(&labels, t, s)
            ));
            steps.push(if found {
                format!("The edge list contains it, so {} and {} are connected.", labels[s], labels[t])
            } else {
                format!("The edge list does not contain it, so {} and {} are not connected.", labels[s], labels[t])
            });
        }
        TaskKind::NodeDegree | TaskKind::ConnectedNodes => {
            let node = instance.targets[0];
            let incident: Vec<(usize, usize)> =
                graph.edges().iter().copied().filter(|&(u, v)| u == node || v == node).collect();
            steps.push(format!("The edges that contain {} are:", labels[node]));
            if incident.is_empty() {
                steps.push("(none)".into());
            }
            for &(u, v) in &incident {
                steps.push(pair_text(&labels, u, v));
            }
            if instance.task == TaskKind::NodeDegree {
                steps.push(format!("There are {} such edges, so the degree is {}.", incident.len(), incident.len()));
            } else {
                steps.push(format!(
                    "The other endpoints of these edges are the connected nodes: {}.",
                    display_answer(&instance.truth, kind)?
                ));
            }
        }
        TaskKind::CycleCheck => {
            // Union-find narration: an edge inside an existing group closes a cycle.
            let mut parent: Vec<usize> = (0..graph.node_count()).collect();
            fn find(parent: &mut [usize], mut x: usize) -> usize {
                while parent[x] != x {
                    parent[x] = parent[parent[x]];
                    x = parent[x];
                }
                x
            }
            let mut closed = false;
            for &(u, v) in graph.edges() {
                let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
                if ru == rv {
                    steps.push(format!(
                        "Edge {} joins two nodes that are already connected, which closes a cycle.",
                        pair_text(&labels, u, v)
                    ));
                    closed = true;
                    break;
                }
                parent[ru] = rv;
                steps.push(format!("Edge {} joins two separate groups.", pair_text(&labels, u, v)));
            }
            if !closed {
                steps.push("No edge joins two nodes that were already connected, so there is no cycle.".into());
            }
        }
    }
    steps.push(format!("The answer is {answer}."));
    Ok(steps.join("\n"))
}

/// Answer wording for natural-language methods: yes/no for the boolean
/// tasks, the program output form otherwise.
pub fn text_answer(answer: &Answer, kind: EncodingKind) -> Result<String, PromptError> {
    Ok(match answer {
        Answer::Boolean(b) | Answer::Cycle(b) => if *b { "Yes" } else { "No" }.to_string(),
        other => display_answer(other, kind)?,
    })
}

fn question_block(graph: &Graph, instance: &TaskInstance, kind: EncodingKind) -> Result<String, PromptError> {
    let question = render_question(instance, kind)?;
    let text = encode_graph(graph, kind)?.prompt_text();
    Ok(format!("Q: {question}\n{text}"))
}

fn render_turn(exemplar: &Exemplar, method: Method, kind: EncodingKind) -> Result<Turn, PromptError> {
    let Exemplar { graph, instance } = exemplar;
    let answer_text = match method {
        Method::CodeGraph(_) => render_exemplar_code(instance.task, graph, &instance.targets, kind)?,
        Method::Cot(_) => cot_rationale(graph, instance, kind)?,
        Method::FewShot(_) => text_answer(&instance.truth, kind)?,
        Method::ZeroShot => unreachable!("zero-shot prompts have no exemplars"),
    };
    Ok(Turn {
        question_text: question_block(graph, instance, kind)?,
        answer_text,
        source_graph: graph.id().to_string(),
    })
}

/// Assembles the full prompt for one test question.
pub fn build_prompt(
    method: Method,
    test_graph: &Graph,
    instance: &TaskInstance,
    exemplars: &[Exemplar],
    kind: EncodingKind,
) -> Result<PromptBundle, PromptError> {
    if exemplars.len() != method.shots() {
        return Err(PromptError::InvalidArgument(format!(
            "{method} needs {} exemplar(s), got {}",
            method.shots(),
            exemplars.len()
        )));
    }
    if instance.graph_ref != test_graph.id() {
        return Err(PromptError::InvalidArgument(format!(
            "instance refers to graph `{}` but graph `{}` was given",
            instance.graph_ref,
            test_graph.id()
        )));
    }
    if let Some(ex) = exemplars
        .iter()
        .find(|ex| ex.graph.id() == test_graph.id() || ex.graph == *test_graph)
    {
        return Err(PromptError::InvalidArgument(format!(
            "exemplar graph `{}` collides with the test graph",
            ex.graph.id()
        )));
    }
    if let Some(ex) = exemplars.iter().find(|ex| ex.instance.task != instance.task) {
        return Err(PromptError::InvalidArgument(format!(
            "exemplar task {} differs from test task {}",
            ex.instance.task, instance.task
        )));
    }
    let turns = exemplars
        .iter()
        .map(|ex| render_turn(ex, method, kind))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PromptBundle {
        header: render_task_description(instance.task, method),
        reminder: method.is_code().then(|| code_instruction(instance.task).to_string()),
        turns,
        test_question: format!("{}\nA:", question_block(test_graph, instance, kind)?),
        metadata: PromptMetadata {
            method,
            task: instance.task,
            encoding: kind,
            graph_ref: test_graph.id().to_string(),
        },
    })
}
