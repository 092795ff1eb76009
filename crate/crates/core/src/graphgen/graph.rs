use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::generators::{GeneratorKind, GeneratorParams};
use super::GraphError;

/// Which half of a dataset a graph was sampled for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(GraphError::Parse(format!("unknown split `{other}`"))),
        }
    }
}

/// Where a sampled graph came from: generator, its parameters, and the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub params: GeneratorParams,
    pub split: Option<Split>,
    pub seed: u64,
}

impl Provenance {
    pub fn generator(&self) -> GeneratorKind {
        self.params.kind()
    }
}

/// An undirected simple graph over nodes `0..n`.
///
/// Edges are stored canonically: each pair has the smaller index first and the
/// list is sorted ascending with no duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    id: String,
    n: usize,
    edges: Vec<(usize, usize)>,
    provenance: Option<Provenance>,
}

impl Graph {
    /// Builds a graph from arbitrary edge pairs, canonicalizing them.
    ///
    /// Self-loops, out-of-range endpoints and duplicate pairs are rejected.
    pub fn new(
        id: impl Into<String>,
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::InvalidGraph("graph must have at least one node".into()));
        }
        let mut canonical = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(GraphError::InvalidGraph(format!("self-loop on node {u}")));
            }
            if u >= n || v >= n {
                return Err(GraphError::InvalidGraph(format!(
                    "edge ({u}, {v}) has an endpoint outside 0..{n}"
                )));
            }
            if !canonical.insert((u.min(v), u.max(v))) {
                return Err(GraphError::InvalidGraph(format!("duplicate edge ({u}, {v})")));
            }
        }
        Ok(Self {
            id: id.into(),
            n,
            edges: canonical.into_iter().collect(),
            provenance: None,
        })
    }

    pub(crate) fn from_canonical(
        id: String,
        n: usize,
        edges: BTreeSet<(usize, usize)>,
        provenance: Provenance,
    ) -> Self {
        debug_assert!(edges.iter().all(|&(u, v)| u < v && v < n));
        Self {
            id,
            n,
            edges: edges.into_iter().collect(),
            provenance: Some(provenance),
        }
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn generator(&self) -> Option<GeneratorKind> {
        self.provenance.as_ref().map(Provenance::generator)
    }

    pub fn split(&self) -> Option<Split> {
        self.provenance.as_ref().and_then(|p| p.split)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    /// Sorted neighbor lists, indexed by node.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn neighbors(&self, node: usize) -> BTreeSet<usize> {
        self.edges
            .iter()
            .filter_map(|&(u, v)| {
                if u == node {
                    Some(v)
                } else if v == node {
                    Some(u)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Number of connected components, isolated nodes included.
    pub fn component_count(&self) -> usize {
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut components = 0;
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(node) = stack.pop() {
                for &next in &adj[node] {
                    if !seen[next] {
                        seen[next] = true;
                        stack.push(next);
                    }
                }
            }
        }
        components
    }

    pub fn to_record(&self) -> GraphRecord {
        GraphRecord {
            id: self.id.clone(),
            n: self.n,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
            generator: self.generator(),
            params: self.provenance.as_ref().map(|p| p.params.to_json()),
            split: self.split(),
            seed: self.provenance.as_ref().map(|p| p.seed),
        }
    }

    pub fn from_record(record: GraphRecord) -> Result<Self, GraphError> {
        let graph = Graph::new(record.id, record.n, record.edges.into_iter().map(|[u, v]| (u, v)))?;
        let provenance = match (record.generator, record.params, record.split, record.seed) {
            (Some(kind), params, split, Some(seed)) => {
                let params = GeneratorParams::from_json(kind, params.as_ref())?;
                Some(Provenance { params, split, seed })
            }
            (None, None, None, None) => None,
            _ => {
                return Err(GraphError::Parse(
                    "generator and seed must be given together".into(),
                ))
            }
        };
        Ok(Self { provenance, ..graph })
    }
}

/// One line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub id: String,
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}
