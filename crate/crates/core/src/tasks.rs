//! The six graph tasks: target selection, ground truth, and question text.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{node_label, EncodingError, EncodingKind, LabelScheme};
use crate::graphgen::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    NodeCount,
    EdgeCount,
    EdgeExistence,
    NodeDegree,
    ConnectedNodes,
    CycleCheck,
}

impl TaskKind {
    pub const ALL: [TaskKind; 6] = [
        TaskKind::NodeCount,
        TaskKind::EdgeCount,
        TaskKind::EdgeExistence,
        TaskKind::NodeDegree,
        TaskKind::ConnectedNodes,
        TaskKind::CycleCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::NodeCount => "node_count",
            TaskKind::EdgeCount => "edge_count",
            TaskKind::EdgeExistence => "edge_existence",
            TaskKind::NodeDegree => "node_degree",
            TaskKind::ConnectedNodes => "connected_nodes",
            TaskKind::CycleCheck => "cycle_check",
        }
    }

    /// Number of target nodes a question of this task names.
    pub fn arity(self) -> usize {
        match self {
            TaskKind::NodeCount | TaskKind::EdgeCount | TaskKind::CycleCheck => 0,
            TaskKind::NodeDegree | TaskKind::ConnectedNodes => 1,
            TaskKind::EdgeExistence => 2,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = TaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        TaskKind::ALL
            .into_iter()
            .find(|t| t.as_str() == wanted)
            .ok_or_else(|| TaskError::Parse(format!("unknown task `{s}`")))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TaskError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

/// A task answer: ground truth, or a normalized model prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Answer {
    /// Node count, edge count or degree.
    Integer(u64),
    /// Edge existence.
    Boolean(bool),
    /// Connected nodes, as node indices; possibly empty.
    Nodes(BTreeSet<usize>),
    /// Cycle check: `true` when the graph has a cycle.
    Cycle(bool),
}

pub type GroundTruth = Answer;

fn check_targets(graph: &Graph, task: TaskKind, targets: &[usize]) -> Result<(), TaskError> {
    if targets.len() != task.arity() {
        return Err(TaskError::InvalidArgument(format!(
            "{task} takes {} target(s), got {}",
            task.arity(),
            targets.len()
        )));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= graph.node_count()) {
        return Err(TaskError::InvalidArgument(format!(
            "target {t} is outside 0..{}",
            graph.node_count()
        )));
    }
    if task == TaskKind::EdgeExistence && targets[0] == targets[1] {
        return Err(TaskError::InvalidArgument("edge existence needs two distinct nodes".into()));
    }
    Ok(())
}

/// Reference answer computed directly from the graph structure.
pub fn oracle_answer(graph: &Graph, task: TaskKind, targets: &[usize]) -> Result<GroundTruth, TaskError> {
    check_targets(graph, task, targets)?;
    Ok(match task {
        TaskKind::NodeCount => Answer::Integer(graph.node_count() as u64),
        TaskKind::EdgeCount => Answer::Integer(graph.edge_count() as u64),
        TaskKind::EdgeExistence => Answer::Boolean(graph.has_edge(targets[0], targets[1])),
        TaskKind::NodeDegree => Answer::Integer(graph.neighbors(targets[0]).len() as u64),
        TaskKind::ConnectedNodes => Answer::Nodes(graph.neighbors(targets[0])),
        TaskKind::CycleCheck => Answer::Cycle(has_cycle_dfs(graph)),
    })
}

/// Iterative DFS; a visited neighbor other than the tree parent closes a cycle.
pub fn has_cycle_dfs(graph: &Graph) -> bool {
    let adj = graph.adjacency();
    let mut visited = vec![false; graph.node_count()];
    for root in 0..graph.node_count() {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        let mut stack = vec![(root, usize::MAX)];
        while let Some((node, parent)) = stack.pop() {
            for &next in &adj[node] {
                if !visited[next] {
                    visited[next] = true;
                    stack.push((next, node));
                } else if next != parent {
                    return true;
                }
            }
        }
    }
    false
}

/// One question about one graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: String,
    pub graph_ref: String,
    pub task: TaskKind,
    pub targets: Vec<usize>,
    pub truth: GroundTruth,
}

impl TaskInstance {
    /// An instance with caller-chosen targets; the truth comes from the oracle.
    pub fn with_targets(graph: &Graph, task: TaskKind, targets: Vec<usize>) -> Result<Self, TaskError> {
        let truth = oracle_answer(graph, task, &targets)?;
        Ok(Self {
            id: format!("{}/{task}", graph.id()),
            graph_ref: graph.id().to_string(),
            task,
            targets,
            truth,
        })
    }
}

/// Picks question targets and fills in the ground truth.
///
/// Degree and connected-node targets are uniform over nodes. Edge-existence
/// pairs are present edges with probability 1/2 and absent pairs otherwise,
/// falling back to whichever class is non-empty; the pair's orientation is
/// random.
pub fn make_task_instance(graph: &Graph, task: TaskKind, seed: u64) -> Result<TaskInstance, TaskError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = graph.node_count();
    let targets = match task {
        TaskKind::NodeCount | TaskKind::EdgeCount | TaskKind::CycleCheck => Vec::new(),
        TaskKind::NodeDegree | TaskKind::ConnectedNodes => vec![rng.random_range(0..n)],
        TaskKind::EdgeExistence => {
            if n < 2 {
                return Err(TaskError::InvalidArgument("edge existence needs at least two nodes".into()));
            }
            let present = graph.edges();
            let absent: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .filter(|&(u, v)| !graph.has_edge(u, v))
                .collect();
            let want_present = rng.random_bool(0.5);
            let pool: &[(usize, usize)] = match (want_present, present.is_empty(), absent.is_empty()) {
                (true, false, _) | (false, false, true) => present,
                _ => &absent,
            };
            let (u, v) = pool[rng.random_range(0..pool.len())];
            if rng.random_bool(0.5) {
                vec![v, u]
            } else {
                vec![u, v]
            }
        }
    };
    let truth = oracle_answer(graph, task, &targets)?;
    Ok(TaskInstance {
        id: format!("{}/{task}", graph.id()),
        graph_ref: graph.id().to_string(),
        task,
        targets,
        truth,
    })
}

/// The question sentence, without the leading `Q: `.
pub fn render_question(instance: &TaskInstance, kind: EncodingKind) -> Result<String, TaskError> {
    let label = |i: usize| node_label(instance.targets[i], kind);
    let integer = kind.label_scheme() == LabelScheme::Integer;
    Ok(match instance.task {
        TaskKind::NodeCount => "How many nodes are in this graph?".to_string(),
        TaskKind::EdgeCount => "How many edges are in this graph?".to_string(),
        TaskKind::CycleCheck => "Is there a cycle in this graph?".to_string(),
        TaskKind::NodeDegree => format!("What is the degree of node {}?", label(0)?),
        TaskKind::EdgeExistence if integer => {
            format!("Is node {} connected to node {}?", label(0)?, label(1)?)
        }
        TaskKind::EdgeExistence => format!("Is {} connected to {}?", label(0)?, label(1)?),
        TaskKind::ConnectedNodes if integer => format!("List all the nodes connected to {}.", label(0)?),
        TaskKind::ConnectedNodes => format!(
            "List all the nodes connected to '{}' in alphabetical order.",
            label(0)?
        ),
    })
}

/// Orders labels like the sample connected-nodes program does: names
/// alphabetically, then numeric labels by value.
pub fn sort_labels(labels: &mut [String]) {
    fn key(s: &str) -> (bool, u128, &str) {
        let digits = !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        match (digits, s.parse::<u128>()) {
            (true, Ok(v)) => (true, v, ""),
            _ => (false, 0, s),
        }
    }
    labels.sort_by(|a, b| key(a).cmp(&key(b)));
}

/// The answer as the sample programs would print it.
pub fn display_answer(answer: &Answer, kind: EncodingKind) -> Result<String, TaskError> {
    Ok(match answer {
        Answer::Integer(v) => v.to_string(),
        Answer::Boolean(true) => "True".into(),
        Answer::Boolean(false) => "False".into(),
        Answer::Cycle(true) => "Has cycle.".into(),
        Answer::Cycle(false) => "No cycle.".into(),
        Answer::Nodes(nodes) if nodes.is_empty() => "No nodes".into(),
        Answer::Nodes(nodes) => {
            let mut labels = nodes
                .iter()
                .map(|&i| node_label(i, kind))
                .collect::<Result<Vec<_>, _>>()?;
            sort_labels(&mut labels);
            labels.join(", ")
        }
    })
}
