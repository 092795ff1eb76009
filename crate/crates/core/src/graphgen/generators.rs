use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::GraphError;

/// Random graph families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Er,
    Ba,
    Sbm,
    Sfn,
    Star,
    Path,
    Complete,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 7] = [
        GeneratorKind::Er,
        GeneratorKind::Ba,
        GeneratorKind::Sbm,
        GeneratorKind::Star,
        GeneratorKind::Sfn,
        GeneratorKind::Path,
        GeneratorKind::Complete,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GeneratorKind::Er => "er",
            GeneratorKind::Ba => "ba",
            GeneratorKind::Sbm => "sbm",
            GeneratorKind::Sfn => "sfn",
            GeneratorKind::Star => "star",
            GeneratorKind::Path => "path",
            GeneratorKind::Complete => "complete",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GeneratorKind {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        GeneratorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == lower)
            .ok_or_else(|| GraphError::Parse(format!("unknown generator `{s}`")))
    }
}

/// Mixing parameters of the directed scale-free growth process
/// (Bollobás, Borgs, Chayes and Riordan).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleFreeParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta_in: f64,
    pub delta_out: f64,
}

impl Default for ScaleFreeParams {
    fn default() -> Self {
        Self {
            alpha: 0.41,
            beta: 0.54,
            gamma: 0.05,
            delta_in: 0.2,
            delta_out: 0.0,
        }
    }
}

/// Family-specific generator parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorParams {
    /// Each unordered pair is an edge independently with probability `p`.
    Er { p: f64 },
    /// Preferential attachment with `m` edges per arriving node.
    Ba { m: usize },
    /// `communities` near-equal contiguous blocks; pairs inside a block are
    /// joined with `p_in`, pairs across blocks with `p_out`.
    Sbm { communities: usize, p_in: f64, p_out: f64 },
    Sfn(ScaleFreeParams),
    Star,
    Path,
    Complete,
}

impl GeneratorParams {
    pub fn kind(&self) -> GeneratorKind {
        match self {
            GeneratorParams::Er { .. } => GeneratorKind::Er,
            GeneratorParams::Ba { .. } => GeneratorKind::Ba,
            GeneratorParams::Sbm { .. } => GeneratorKind::Sbm,
            GeneratorParams::Sfn(_) => GeneratorKind::Sfn,
            GeneratorParams::Star => GeneratorKind::Star,
            GeneratorParams::Path => GeneratorKind::Path,
            GeneratorParams::Complete => GeneratorKind::Complete,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            GeneratorParams::Er { p } => json!({ "p": p }),
            GeneratorParams::Ba { m } => json!({ "m": m }),
            GeneratorParams::Sbm {
                communities,
                p_in,
                p_out,
            } => json!({ "communities": communities, "p_in": p_in, "p_out": p_out }),
            GeneratorParams::Sfn(sfn) => json!(sfn),
            GeneratorParams::Star | GeneratorParams::Path | GeneratorParams::Complete => json!({}),
        }
    }

    pub fn from_json(kind: GeneratorKind, value: Option<&serde_json::Value>) -> Result<Self, GraphError> {
        #[derive(Deserialize)]
        struct Er {
            p: f64,
        }
        #[derive(Deserialize)]
        struct Ba {
            m: usize,
        }
        #[derive(Deserialize)]
        struct Sbm {
            communities: usize,
            p_in: f64,
            p_out: f64,
        }

        let empty = json!({});
        let value = value.unwrap_or(&empty).clone();
        let bad = |e: serde_json::Error| GraphError::Parse(format!("bad {kind} params: {e}"));
        Ok(match kind {
            GeneratorKind::Er => {
                let Er { p } = serde_json::from_value(value).map_err(bad)?;
                GeneratorParams::Er { p }
            }
            GeneratorKind::Ba => {
                let Ba { m } = serde_json::from_value(value).map_err(bad)?;
                GeneratorParams::Ba { m }
            }
            GeneratorKind::Sbm => {
                let Sbm {
                    communities,
                    p_in,
                    p_out,
                } = serde_json::from_value(value).map_err(bad)?;
                GeneratorParams::Sbm {
                    communities,
                    p_in,
                    p_out,
                }
            }
            GeneratorKind::Sfn => GeneratorParams::Sfn(serde_json::from_value(value).map_err(bad)?),
            GeneratorKind::Star => GeneratorParams::Star,
            GeneratorKind::Path => GeneratorParams::Path,
            GeneratorKind::Complete => GeneratorParams::Complete,
        })
    }
}

/// A fully specified generator call: node count plus family parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub n: usize,
    pub params: GeneratorParams,
}

impl GeneratorSpec {
    pub fn new(n: usize, params: GeneratorParams) -> Self {
        Self { n, params }
    }

    pub fn kind(&self) -> GeneratorKind {
        self.params.kind()
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let n = self.n;
        let invalid = |msg: String| Err(GraphError::InvalidParameters(msg));
        if n == 0 {
            return invalid("node count must be positive".into());
        }
        let in_unit = |p: f64| (0.0..=1.0).contains(&p);
        match self.params {
            GeneratorParams::Er { p } if !in_unit(p) => invalid(format!("ER p={p} outside [0, 1]")),
            GeneratorParams::Ba { m } if m == 0 || m >= n => {
                invalid(format!("BA m={m} outside [1, {}]", n.saturating_sub(1)))
            }
            GeneratorParams::Sbm {
                communities,
                p_in,
                p_out,
            } => {
                if !(2..=10).contains(&communities) || communities > n {
                    invalid(format!("SBM communities={communities} outside [2, min(10, {n})]"))
                } else if !in_unit(p_in) || !in_unit(p_out) {
                    invalid(format!("SBM probabilities ({p_in}, {p_out}) outside [0, 1]"))
                } else {
                    Ok(())
                }
            }
            GeneratorParams::Sfn(sfn) => {
                let sum = sfn.alpha + sfn.beta + sfn.gamma;
                if n < 3 {
                    invalid(format!("SFN needs at least 3 nodes, got {n}"))
                } else if [sfn.alpha, sfn.beta, sfn.gamma].iter().any(|&x| x < 0.0)
                    || (sum - 1.0).abs() > 1e-9
                {
                    invalid("SFN alpha, beta, gamma must be non-negative and sum to 1".into())
                } else if sfn.alpha + sfn.gamma <= 0.0 {
                    invalid("SFN needs alpha + gamma > 0 to add nodes".into())
                } else if sfn.delta_in < 0.0 || sfn.delta_out < 0.0 {
                    invalid("SFN delta_in and delta_out must be non-negative".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

pub(crate) fn generate_edges(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> BTreeSet<(usize, usize)> {
    let n = spec.n;
    let mut edges = BTreeSet::new();
    match spec.params {
        GeneratorParams::Er { p } => {
            for u in 0..n {
                for v in u + 1..n {
                    if rng.random::<f64>() < p {
                        edges.insert((u, v));
                    }
                }
            }
        }
        GeneratorParams::Ba { m } => barabasi_albert(n, m, rng, &mut edges),
        GeneratorParams::Sbm {
            communities,
            p_in,
            p_out,
        } => {
            let blocks = block_assignment(n, communities);
            for u in 0..n {
                for v in u + 1..n {
                    let p = if blocks[u] == blocks[v] { p_in } else { p_out };
                    if rng.random::<f64>() < p {
                        edges.insert((u, v));
                    }
                }
            }
        }
        GeneratorParams::Sfn(sfn) => scale_free(n, sfn, rng, &mut edges),
        GeneratorParams::Star => edges.extend((1..n).map(|v| (0, v))),
        GeneratorParams::Path => edges.extend((1..n).map(|v| (v - 1, v))),
        GeneratorParams::Complete => {
            for u in 0..n {
                edges.extend((u + 1..n).map(|v| (u, v)));
            }
        }
    }
    edges
}

/// Block index of every node for `k` near-equal contiguous blocks; the first
/// `n % k` blocks hold one extra node.
pub fn block_assignment(n: usize, k: usize) -> Vec<usize> {
    let base = n / k;
    let extra = n % k;
    let mut out = Vec::with_capacity(n);
    for block in 0..k {
        let size = base + usize::from(block < extra);
        out.extend(std::iter::repeat_n(block, size));
    }
    out
}

fn barabasi_albert(n: usize, m: usize, rng: &mut ChaCha8Rng, edges: &mut BTreeSet<(usize, usize)>) {
    // Seed graph: star on nodes 0..=m centered at 0.
    let mut repeated: Vec<usize> = Vec::new();
    for leaf in 1..=m {
        edges.insert((0, leaf));
        repeated.push(0);
        repeated.push(leaf);
    }
    for source in m + 1..n {
        let mut targets = BTreeSet::new();
        while targets.len() < m {
            targets.insert(*repeated.choose(rng).expect("seed star is non-empty"));
        }
        for &t in &targets {
            edges.insert((t.min(source), t.max(source)));
            repeated.push(t);
            repeated.push(source);
        }
    }
}

fn scale_free(n: usize, params: ScaleFreeParams, rng: &mut ChaCha8Rng, edges: &mut BTreeSet<(usize, usize)>) {
    // Directed multigraph seeded with the 3-cycle 0->1->2->0; collapsed to a
    // simple undirected graph at the end.
    let mut directed: Vec<(usize, usize)> = vec![(0, 1), (1, 2), (2, 0)];
    let mut out_list: Vec<usize> = vec![0, 1, 2];
    let mut in_list: Vec<usize> = vec![1, 2, 0];
    let mut node_count = 3;

    fn choose(candidates: &[usize], node_count: usize, delta: f64, rng: &mut ChaCha8Rng) -> usize {
        if delta > 0.0 {
            let bias = node_count as f64 * delta;
            if rng.random::<f64>() < bias / (bias + candidates.len() as f64) {
                return rng.random_range(0..node_count);
            }
        }
        *candidates.choose(rng).expect("degree lists are non-empty")
    }

    while node_count < n {
        let r: f64 = rng.random();
        let (v, w) = if r < params.alpha {
            let w = choose(&in_list, node_count, params.delta_in, rng);
            let v = node_count;
            node_count += 1;
            (v, w)
        } else if r < params.alpha + params.beta {
            let v = choose(&out_list, node_count, params.delta_out, rng);
            let w = choose(&in_list, node_count, params.delta_in, rng);
            (v, w)
        } else {
            let v = choose(&out_list, node_count, params.delta_out, rng);
            let w = node_count;
            node_count += 1;
            (v, w)
        };
        directed.push((v, w));
        out_list.push(v);
        in_list.push(w);
    }
    edges.extend(
        directed
            .into_iter()
            .filter(|&(v, w)| v != w)
            .map(|(v, w)| (v.min(w), v.max(w))),
    );
}
