//! Random undirected graph generation and dataset sampling.
//!
//! Seven families are supported: Erdős–Rényi, Barabási–Albert, stochastic
//! block model, directed scale-free growth (collapsed to a simple undirected
//! graph), star, path and complete graphs. Every generator is a pure function
//! of its spec and seed.

mod generators;
mod graph;

use std::io::{BufRead, Write};
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub use generators::{block_assignment, GeneratorKind, GeneratorParams, GeneratorSpec, ScaleFreeParams};
pub use graph::{Graph, GraphRecord, Provenance, Split};

use crate::seed::derive_seed;

/// Node counts used for sampled datasets.
pub const NODE_RANGE: RangeInclusive<usize> = 5..=20;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid generator parameters: {0}")]
    InvalidParameters(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("dataset i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Generates one graph. Deterministic in `(spec, seed)`.
pub fn generate_graph(spec: &GeneratorSpec, seed: u64) -> Result<Graph, GraphError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = generators::generate_edges(spec, &mut rng);
    let id = format!("{}-n{}-{seed:016x}", spec.kind(), spec.n);
    Ok(Graph::from_canonical(
        id,
        spec.n,
        edges,
        Provenance {
            params: spec.params.clone(),
            split: None,
            seed,
        },
    ))
}

/// Draws a generator spec the way sampled datasets do: `n` uniform over
/// [`NODE_RANGE`], then family parameters conditioned on `n`.
pub fn sample_spec(kind: GeneratorKind, rng: &mut impl Rng) -> GeneratorSpec {
    let n = rng.random_range(NODE_RANGE);
    let params = match kind {
        // Open interval (0, 1).
        GeneratorKind::Er => GeneratorParams::Er {
            p: loop {
                let p: f64 = rng.random();
                if p > 0.0 {
                    break p;
                }
            },
        },
        GeneratorKind::Ba => GeneratorParams::Ba {
            m: rng.random_range(1..n),
        },
        GeneratorKind::Sbm => GeneratorParams::Sbm {
            communities: rng.random_range(2..=n.min(10)),
            p_in: rng.random_range(0.6..0.9),
            p_out: rng.random_range(0.05..0.3),
        },
        GeneratorKind::Sfn => GeneratorParams::Sfn(ScaleFreeParams::default()),
        GeneratorKind::Star => GeneratorParams::Star,
        GeneratorKind::Path => GeneratorParams::Path,
        GeneratorKind::Complete => GeneratorParams::Complete,
    };
    GeneratorSpec { n, params }
}

/// Samples `count` graphs of one family.
///
/// Graph `i` gets the seed `derive_seed(master_seed, split, family, i)`, so
/// train and test streams never share seeds and any graph can be regenerated
/// on its own.
pub fn sample_dataset(
    family: GeneratorKind,
    count: usize,
    split: Split,
    master_seed: u64,
) -> Result<Vec<Graph>, GraphError> {
    if count == 0 {
        return Err(GraphError::InvalidArgument("dataset count must be at least 1".into()));
    }
    (0..count)
        .map(|index| {
            let seed = derive_seed(&[&master_seed, &split, &family, &index]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            let spec = sample_spec(family, &mut rng);
            let graph = generate_graph(&spec, seed)?;
            let provenance = Provenance {
                params: spec.params,
                split: Some(split),
                seed,
            };
            Ok(graph
                .with_id(format!("{family}-{split}-{index:04}"))
                .with_provenance(provenance))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetStats {
    pub avg_nodes: f64,
    pub avg_edges: f64,
    /// Mean over graphs of `2|E| / n`.
    pub avg_degree: f64,
}

pub fn dataset_stats(graphs: &[Graph]) -> Result<DatasetStats, GraphError> {
    if graphs.is_empty() {
        return Err(GraphError::InvalidArgument("dataset_stats needs at least one graph".into()));
    }
    let count = graphs.len() as f64;
    let (mut nodes, mut edges, mut degree) = (0.0, 0.0, 0.0);
    for g in graphs {
        let n = g.node_count() as f64;
        let e = g.edge_count() as f64;
        nodes += n;
        edges += e;
        degree += 2.0 * e / n;
    }
    Ok(DatasetStats {
        avg_nodes: nodes / count,
        avg_edges: edges / count,
        avg_degree: degree / count,
    })
}

/// Writes graphs as line-delimited JSON, one graph per line.
pub fn write_dataset(graphs: &[Graph], mut out: impl Write) -> Result<(), GraphError> {
    for g in graphs {
        let line = serde_json::to_string(&g.to_record()).map_err(|e| GraphError::Parse(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset(input: impl BufRead) -> Result<Vec<Graph>, GraphError> {
    let mut graphs = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: GraphRecord = serde_json::from_str(&line)
            .map_err(|e| GraphError::Parse(format!("line {}: {e}", lineno + 1)))?;
        graphs.push(Graph::from_record(record)?);
    }
    Ok(graphs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, params: GeneratorParams) -> GeneratorSpec {
        GeneratorSpec::new(n, params)
    }

    #[test]
    fn complete_five_has_ten_edges() {
        let g = generate_graph(&spec(5, GeneratorParams::Complete), 1).unwrap();
        assert_eq!(g.edge_count(), 10);
    }

    #[test]
    fn path_twelve_is_a_simple_path() {
        let g = generate_graph(&spec(12, GeneratorParams::Path), 1).unwrap();
        assert_eq!(g.edge_count(), 11);
        let deg = g.degrees();
        assert_eq!(deg.iter().filter(|&&d| d == 1).count(), 2);
        assert!(deg.iter().all(|&d| d == 1 || d == 2));
        assert_eq!(g.component_count(), 1);
    }

    #[test]
    fn er_with_p_one_is_complete() {
        let er = generate_graph(&spec(12, GeneratorParams::Er { p: 1.0 }), 99).unwrap();
        let complete = generate_graph(&spec(12, GeneratorParams::Complete), 0).unwrap();
        assert_eq!(er.edges(), complete.edges());
    }

    #[test]
    fn ba_rejects_m_at_least_n() {
        let err = generate_graph(&spec(6, GeneratorParams::Ba { m: 6 }), 0).unwrap_err();
        assert!(matches!(err, GraphError::InvalidParameters(_)));
    }

    #[test]
    fn ba_edge_count_follows_growth_law() {
        for m in 1..10 {
            let g = generate_graph(&spec(10, GeneratorParams::Ba { m }), m as u64).unwrap();
            assert_eq!(g.edge_count(), m + (10 - m - 1) * m, "m={m}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let s = spec(15, GeneratorParams::Sfn(ScaleFreeParams::default()));
        assert_eq!(generate_graph(&s, 42).unwrap(), generate_graph(&s, 42).unwrap());
    }

    #[test]
    fn sbm_respects_block_structure_at_extremes() {
        let s = spec(
            9,
            GeneratorParams::Sbm {
                communities: 3,
                p_in: 1.0,
                p_out: 0.0,
            },
        );
        let g = generate_graph(&s, 5).unwrap();
        // Three disjoint triangles.
        assert_eq!(g.edge_count(), 9);
        assert_eq!(g.component_count(), 3);
    }

    #[test]
    fn sampled_nodes_in_range_and_streams_disjoint() {
        let train = sample_dataset(GeneratorKind::Er, 50, Split::Train, 7).unwrap();
        let test = sample_dataset(GeneratorKind::Er, 50, Split::Test, 7).unwrap();
        for g in train.iter().chain(&test) {
            assert!(NODE_RANGE.contains(&g.node_count()));
        }
        let train_seeds: Vec<u64> = train.iter().map(|g| g.provenance().unwrap().seed).collect();
        assert!(test
            .iter()
            .all(|g| !train_seeds.contains(&g.provenance().unwrap().seed)));
    }

    #[test]
    fn stats_of_small_graphs() {
        let complete = generate_graph(&spec(5, GeneratorParams::Complete), 0).unwrap();
        let s = dataset_stats(std::slice::from_ref(&complete)).unwrap();
        assert_eq!((s.avg_nodes, s.avg_edges, s.avg_degree), (5.0, 10.0, 4.0));

        let path = generate_graph(&spec(3, GeneratorParams::Path), 0).unwrap();
        let s = dataset_stats(&[path]).unwrap();
        assert_eq!((s.avg_nodes, s.avg_edges), (3.0, 2.0));
        assert!((s.avg_degree - 4.0 / 3.0).abs() < 1e-12);

        assert!(matches!(dataset_stats(&[]), Err(GraphError::InvalidArgument(_))));
    }

    #[test]
    fn dataset_file_round_trip() {
        let graphs = sample_dataset(GeneratorKind::Sbm, 5, Split::Train, 3).unwrap();
        let mut buf = Vec::new();
        write_dataset(&graphs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().next().unwrap().starts_with("{\"id\":\"sbm-train-0000\",\"n\":"));
        assert_eq!(read_dataset(&buf[..]).unwrap(), graphs);
    }
}
