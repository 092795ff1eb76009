//! Helpers shared by integration tests and the acceptance suite.
#![allow(dead_code)]

use std::path::PathBuf;

use codegraph_core::harness::EvalRecord;
use codegraph_core::prompting::Method;
use codegraph_core::{Answer, EncodingKind, GeneratorKind, Graph, TaskKind};

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

/// Reads a fixture with line endings normalized to `\n` and the final newline
/// removed.
pub fn read_fixture(rel: &str) -> String {
    let text = std::fs::read_to_string(fixture_path(rel)).unwrap_or_else(|e| panic!("fixture {rel}: {e}"));
    text.replace("\r\n", "\n").trim_end_matches('\n').to_string()
}

/// The five-node graph used in every encoding example box.
pub fn reference_graph() -> Graph {
    Graph::new("reference", 5, [(0, 1), (0, 2), (1, 2), (2, 3), (2, 4)]).unwrap()
}

/// Exemplar and test graphs of the edge-existence prompt example.
pub fn edge_existence_prompt_graphs() -> (Graph, Graph) {
    let exemplar = Graph::new("example-exemplar", 11, [(0, 2), (3, 5), (3, 6), (4, 5), (5, 9)]).unwrap();
    let test = Graph::new(
        "example-test",
        6,
        [(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (1, 2), (1, 4), (1, 5), (2, 3), (3, 5)],
    )
    .unwrap();
    (exemplar, test)
}

/// Independent cycle oracle: an undirected graph has a cycle iff some edge
/// joins two nodes already in the same union-find component.
pub fn union_find_has_cycle(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut y = x;
        while parent[y] != r {
            let next = parent[y];
            parent[y] = r;
            y = next;
        }
        r
    }
    for &(u, v) in edges {
        let (a, b) = (root(&mut parent, u), root(&mut parent, v));
        if a == b {
            return true;
        }
        parent[a] = b;
    }
    false
}

/// Zero-shot accuracies from the main results table, in the column order
/// adjacency, incident, co-authorship, friendship, social network, expert.
pub const ZERO_SHOT_EDGE_EXISTENCE: [f64; 6] = [75.4, 73.0, 69.8, 69.0, 73.2, 77.2];
pub const ZERO_SHOT_NODE_DEGREE: [f64; 6] = [49.2, 73.0, 42.0, 45.6, 43.6, 43.4];
pub const ZERO_SHOT_EDGE_COUNT: [f64; 6] = [44.8, 4.0, 36.2, 41.0, 41.8, 37.0];

/// `(task, accuracies, published μ, published δ)`.
pub fn zero_shot_rows() -> Vec<(TaskKind, [f64; 6], f64, f64)> {
    vec![
        (TaskKind::EdgeExistence, ZERO_SHOT_EDGE_EXISTENCE, 72.9, 8.2),
        (TaskKind::NodeDegree, ZERO_SHOT_NODE_DEGREE, 49.5, 31.0),
        (TaskKind::EdgeCount, ZERO_SHOT_EDGE_COUNT, 34.1, 40.8),
    ]
}

/// Synthetic records realizing the given per-encoding accuracies with 500
/// instances per cell.
pub fn synthetic_records(task: TaskKind, method: Method, accuracies: &[f64; 6]) -> Vec<EvalRecord> {
    let mut out = Vec::new();
    for (kind, &acc) in EncodingKind::ALL.iter().zip(accuracies) {
        let correct = (acc * 5.0).round() as usize;
        for i in 0..500 {
            let truth = Answer::Integer(1);
            let is_correct = i < correct;
            let graph_ref = format!("er-test-{i:04}");
            out.push(EvalRecord {
                id: format!("{method}/{task}/{kind}/{graph_ref}"),
                instance_id: format!("{graph_ref}/{task}"),
                graph_ref,
                method,
                task,
                encoding: *kind,
                generator: Some(GeneratorKind::Er),
                model_name: "synthetic".into(),
                prediction: Some(if is_correct { truth.clone() } else { Answer::Integer(0) }),
                failure: None,
                failure_detail: None,
                truth,
                correct: is_correct,
                execution_status: None,
                latency_ms: 0,
            });
        }
    }
    out
}
